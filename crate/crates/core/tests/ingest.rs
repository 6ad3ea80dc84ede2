use chrono::NaiveDate;
use termfit::ingest::{
    build_observations, dedupe_last, read_closed_operations, read_offers, write_closed_operations, write_exclusions,
    write_offers, ClosedOperation, IngestOptions, OfferRecord, RateType,
};
use termfit::testkit::{generate_instance, reference_params};
use termfit::{accrued_interest, DayCount, ModelKind, Side};

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn op(id: &str, date: &str) -> ClosedOperation {
    ClosedOperation {
        instrument_id: id.into(),
        issuer: "G".into(),
        classification: "bond".into(),
        isin: format!("CR{id}"),
        currency: "CRC".into(),
        issue_date: d("2012-01-10"),
        maturity_date: d("2022-01-10"),
        next_coupon_date: None,
        periodicity: 2,
        net_rate: 0.08,
        rate_type: RateType::Fixed,
        operation_type: "secondary".into(),
        operation_date: d(date),
        nominal_yield: 0.075,
        clean_price: 101.5,
        transaction_value: 1e6,
    }
}

fn offer(id: &str, side: Side, y: f64) -> OfferRecord {
    OfferRecord {
        instrument_id: id.into(),
        side,
        yield_rate: y,
        facial: 1000.0,
    }
}

#[test]
fn dedupe_keeps_last() {
    let out = dedupe_last(vec![
        op("A", "2015-03-02"),
        op("B", "2015-03-03"),
        op("A", "2015-03-05"),
    ]);
    let got: Vec<_> = out
        .iter()
        .map(|o| (o.instrument_id.as_str(), o.operation_date))
        .collect();
    assert_eq!(got, vec![("A", d("2015-03-05")), ("B", d("2015-03-03"))]);

    let distinct = vec![op("A", "2015-03-02"), op("B", "2015-03-01")];
    assert_eq!(dedupe_last(distinct.clone()), distinct);

    let mut later = op("A", "2015-03-02");
    later.clean_price = 99.0;
    let out = dedupe_last(vec![op("A", "2015-03-02"), later.clone()]);
    assert_eq!(out, vec![later]);

    // an older row after a newer one does not win
    let out = dedupe_last(vec![op("A", "2015-03-05"), op("A", "2015-03-02")]);
    assert_eq!(out[0].operation_date, d("2015-03-05"));
}

#[test]
fn dedupe_is_idempotent() {
    let ops = vec![
        op("A", "2015-03-02"),
        op("B", "2015-03-03"),
        op("A", "2015-03-05"),
        op("C", "2015-03-01"),
        op("B", "2015-03-03"),
    ];
    let once = dedupe_last(ops);
    assert_eq!(dedupe_last(once.clone()), once);
}

#[test]
fn observations_from_books() {
    let valuation = d("2015-03-17");
    let ops = vec![
        op("A", "2015-03-17"),
        op("B", "2015-03-12"),
        op("C", "2015-03-10"),
        op("D", "2015-03-10"),
    ];
    let offers = vec![
        offer("A", Side::Buy, 0.07),
        offer("A", Side::Sell, 0.075),
        offer("B", Side::Buy, 0.07),
        offer("B", Side::Sell, 0.08),
        offer("C", Side::Sell, 0.08),
    ];
    let out = build_observations(&ops, &offers, valuation, &IngestOptions::default());
    assert_eq!(out.observations.len() + out.exclusions.len(), ops.len());
    let a = &out.observations[0];
    assert_eq!(a.staleness_days, 0);
    assert!((a.spread - 0.005).abs() < 1e-15);
    let accrued = accrued_interest(&a.bond, valuation, DayCount::Actual365Fixed).unwrap();
    assert!(accrued > 0.0);
    assert!((a.observed_dirty_price - (101.5 + accrued)).abs() < 1e-12);
    assert_eq!(out.observations[1].staleness_days, 5);
    let reasons: Vec<_> = out
        .exclusions
        .iter()
        .map(|e| (e.instrument_id.as_str(), e.reason.as_str()))
        .collect();
    assert_eq!(reasons, vec![("C", "no buy offers"), ("D", "no offers")]);

    let mut log = Vec::new();
    write_exclusions(&out.exclusions, &mut log).unwrap();
    let first = String::from_utf8(log).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first, r#"{"instrument_id":"C","reason":"no buy offers"}"#);
}

#[test]
fn face_scaling() {
    let out = build_observations(
        &[op("A", "2015-03-17")],
        &[offer("A", Side::Buy, 0.07), offer("A", Side::Sell, 0.08)],
        d("2015-03-17"),
        &IngestOptions {
            face: 1000.0,
            ..IngestOptions::default()
        },
    );
    let o = &out.observations[0];
    let accrued = accrued_interest(&o.bond, d("2015-03-17"), DayCount::Actual365Fixed).unwrap();
    assert!((o.observed_dirty_price - (1015.0 + accrued)).abs() < 1e-9);
}

#[test]
fn iterative_weight_cap() {
    // weights proportional to 0.70, 0.15, 0.10, 0.05 via spreads 1/w
    let shares = [("A", 0.70), ("B", 0.15), ("C", 0.10), ("D", 0.05)];
    let ops: Vec<_> = shares.iter().map(|(id, _)| op(id, "2015-03-17")).collect();
    let offers: Vec<_> = shares
        .iter()
        .flat_map(|(id, w)| [offer(id, Side::Buy, 0.05), offer(id, Side::Sell, 0.05 + 0.001 / w)])
        .collect();
    let options = IngestOptions {
        weight_cap: Some(0.5),
        ..IngestOptions::default()
    };
    let out = build_observations(&ops, &offers, d("2015-03-17"), &options);
    let kept: Vec<_> = out.observations.iter().map(|o| o.bond.id.as_str()).collect();
    assert_eq!(kept, vec!["B", "C", "D"]);
    assert_eq!(out.exclusions.len(), 1);
    assert_eq!(out.exclusions[0].instrument_id, "A");
    assert_eq!(out.exclusions[0].reason, "weight share above cap");
}

#[test]
fn csv_round_trip() {
    let mut ops = vec![op("A", "2015-03-02"), op("B", "2015-03-03")];
    ops[1].next_coupon_date = Some(d("2015-07-10"));
    ops[1].clean_price = 98.123_456_789_012_34;
    let mut buf = Vec::new();
    write_closed_operations(&ops, &mut buf).unwrap();
    let (back, dropped) = read_closed_operations(buf.as_slice(), d("2015-03-17")).unwrap();
    assert!(dropped.is_empty());
    assert_eq!(back, ops);

    let offers = vec![offer("A", Side::Buy, 0.0712345), offer("A", Side::Sell, 0.08)];
    let mut buf = Vec::new();
    write_offers(&offers, &mut buf).unwrap();
    assert_eq!(read_offers(buf.as_slice()).unwrap(), offers);
}

#[test]
fn synthetic_fixture_ingests_back() {
    let inst = generate_instance(&reference_params(ModelKind::Svensson), 4, 0.05).unwrap();
    let dir = tempfile::tempdir().unwrap();
    inst.write_fixture(dir.path()).unwrap();
    let (ops, dropped) =
        termfit::ingest::parse_closed_operations(&dir.path().join("closed_operations.csv"), inst.valuation).unwrap();
    assert!(dropped.is_empty());
    let offers = termfit::ingest::parse_offers(&dir.path().join("offers.csv")).unwrap();
    let out = build_observations(&dedupe_last(ops), &offers, inst.valuation, &IngestOptions::default());
    assert!(out.exclusions.is_empty());
    for (a, b) in out.observations.iter().zip(&inst.observations) {
        assert_eq!(a.bond, b.bond);
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.staleness_days, b.staleness_days);
        assert_eq!(a.spread, b.spread);
        assert!((a.observed_dirty_price - b.observed_dirty_price).abs() < 1e-12 * b.observed_dirty_price);
    }
}

#[test]
fn missing_column_is_named() {
    let err = read_offers("instrument_id,side,facial\n".as_bytes()).unwrap_err();
    assert_eq!(err.to_string(), "missing column `yield`");
}
