mod common;

use std::collections::BTreeMap;

use causalq::data::{AttrId, Context, DataView, Dataset};
use causalq::engine::{
    analyze, detect_bias, fine_explanations, naive_estimate, responsibility, rewrite_direct, rewrite_total, AnalysisConfig,
    Balance, ContextStatus, EffectKind, QuerySpec,
};
use causalq::indep::TestConfig;
use causalq::ExactEstimate;
use common::{binary_dag, from_counts, ids, sample};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Kidney-stone style counts: treatment A succeeds 81/87 and 192/263,
/// treatment B 234/270 and 55/80 on small and large stones.
fn simpson() -> Dataset {
    from_counts(
        &["T", "Stone", "Y"],
        &[
            (&["A", "small", "1"], 81),
            (&["A", "small", "0"], 6),
            (&["B", "small", "1"], 234),
            (&["B", "small", "0"], 36),
            (&["A", "large", "1"], 192),
            (&["A", "large", "0"], 71),
            (&["B", "large", "1"], 55),
            (&["B", "large", "0"], 25),
        ],
    )
}

fn codes(ds: &Dataset, attr: AttrId, t0: &str, t1: &str) -> (u32, u32) {
    (ds.encode(attr, t0).unwrap(), ds.encode(attr, t1).unwrap())
}

fn cfg() -> TestConfig {
    TestConfig { seed: 11, ..Default::default() }
}

#[test]
fn simpson_reversal_in_exact_arithmetic() {
    let ds = simpson();
    let view = DataView::all(&ds);
    let [t, z, y] = ids(&ds, &["T", "Stone", "Y"])[..] else { unreachable!() };
    let (t0, t1) = codes(&ds, t, "B", "A");
    let naive: ExactEstimate = naive_estimate(&view, t, t0, t1, y, &cfg()).unwrap();
    assert_eq!(naive.delta, Some(q(273, 350) - q(289, 350)));
    let total: ExactEstimate = rewrite_total(&view, t, t0, t1, y, &[z], &cfg()).unwrap();
    let (w_small, w_large) = (q(357, 700), q(343, 700));
    let a = w_small.clone() * q(81, 87) + w_large.clone() * q(192, 263);
    let b = w_small * q(234, 270) + w_large * q(55, 80);
    assert_eq!(total.t1_average, Some(a.clone()));
    assert_eq!(total.t0_average, Some(b.clone()));
    assert_eq!(total.delta, Some(a - b));
    assert_eq!(total.matched_fraction, q(1, 1));
    let d = total.to_f64().delta.unwrap();
    assert!(d > 0.0 && naive.to_f64().delta.unwrap() < 0.0);

    let verdict = detect_bias(&view, t, &[z], &cfg()).unwrap();
    assert_eq!(verdict.balance, Balance::Biased);
    assert!(verdict.p_value().unwrap() < 0.01);
}

#[test]
fn balanced_blocks_collapse_to_naive() {
    let ds = from_counts(
        &["T", "Z", "Y"],
        &[
            (&["a", "p", "1"], 7),
            (&["a", "p", "0"], 13),
            (&["b", "p", "1"], 15),
            (&["b", "p", "0"], 5),
            (&["a", "q", "1"], 30),
            (&["a", "q", "0"], 10),
            (&["b", "q", "1"], 4),
            (&["b", "q", "0"], 36),
        ],
    );
    let view = DataView::all(&ds);
    let [t, z, y] = ids(&ds, &["T", "Z", "Y"])[..] else { unreachable!() };
    let (t0, t1) = codes(&ds, t, "a", "b");
    let naive: ExactEstimate = naive_estimate(&view, t, t0, t1, y, &cfg()).unwrap();
    let total: ExactEstimate = rewrite_total(&view, t, t0, t1, y, &[z], &cfg()).unwrap();
    assert_eq!(naive.delta, total.delta);
    let (n, a) = (naive.to_f64(), total.to_f64());
    assert!((n.delta.unwrap() - a.delta.unwrap()).abs() <= 1e-12);
    assert_eq!(detect_bias(&view, t, &[z], &cfg()).unwrap().balance, Balance::Balanced);
}

#[test]
fn single_arm_block_is_dropped() {
    let base: Vec<(&[&str], usize)> = vec![
        (&["a", "p", "1"], 3),
        (&["a", "p", "0"], 5),
        (&["b", "p", "1"], 6),
        (&["b", "p", "0"], 1),
        (&["a", "q", "1"], 2),
        (&["b", "q", "0"], 4),
        (&["b", "q", "1"], 9),
    ];
    let mut extended = base.clone();
    extended.push((&["b", "r", "1"], 50));
    extended.push((&["b", "r", "0"], 3));
    let with = from_counts(&["T", "Z", "Y"], &extended);
    let without = from_counts(&["T", "Z", "Y"], &base);
    let est = |ds: &Dataset| -> ExactEstimate {
        let view = DataView::all(ds);
        let [t, z, y] = ids(ds, &["T", "Z", "Y"])[..] else { unreachable!() };
        let (t0, t1) = codes(ds, t, "a", "b");
        rewrite_total(&view, t, t0, t1, y, &[z], &cfg()).unwrap()
    };
    let (a, b) = (est(&with), est(&without));
    assert_eq!(a.delta, b.delta);
    assert_eq!(a.t0_average, b.t0_average);
    assert_eq!(a.t1_average, b.t1_average);
    assert_eq!(a.blocks, 3);
    assert_eq!(a.matched_blocks, 2);
    assert_eq!(a.matched_fraction, q(30, 83));
    assert_eq!(b.matched_fraction, q(1, 1));
}

#[test]
fn no_matched_blocks_leave_delta_undefined() {
    let ds = from_counts(&["T", "Z", "Y"], &[(&["a", "p", "1"], 3), (&["b", "q", "0"], 3)]);
    let view = DataView::all(&ds);
    let [t, z, y] = ids(&ds, &["T", "Z", "Y"])[..] else { unreachable!() };
    let (t0, t1) = codes(&ds, t, "a", "b");
    let e: ExactEstimate = rewrite_total(&view, t, t0, t1, y, &[z], &cfg()).unwrap();
    assert_eq!(e.delta, None);
    assert!(e.matched_fraction.is_zero());
}

#[test]
fn constant_mediator_negates_total_effect() {
    let ds = from_counts(
        &["T", "M", "Y"],
        &[(&["a", "m", "1"], 12), (&["a", "m", "0"], 8), (&["b", "m", "1"], 3), (&["b", "m", "0"], 14)],
    );
    let view = DataView::all(&ds);
    let [t, m, y] = ids(&ds, &["T", "M", "Y"])[..] else { unreachable!() };
    let (t0, t1) = codes(&ds, t, "a", "b");
    let total: ExactEstimate = rewrite_total(&view, t, t0, t1, y, &[], &cfg()).unwrap();
    let direct: ExactEstimate = rewrite_direct(&view, t, t0, t1, y, &[], &[m], &cfg()).unwrap();
    assert_eq!(direct.delta, total.delta.map(|d| -d));
    assert_eq!(direct.contrast, "t1->t0");
}

#[test]
fn chain_has_total_but_no_direct_effect() {
    let dag = binary_dag(&["T", "M", "Y"], &[("T", "M"), ("M", "Y")]);
    let ds = sample(&dag, 10_000, 21);
    let view = DataView::all(&ds);
    let [t, m, y] = ids(&ds, &["T", "M", "Y"])[..] else { unreachable!() };
    let (t0, t1) = codes(&ds, t, "0", "1");
    let total = rewrite_total::<f64>(&view, t, t0, t1, y, &[], &cfg()).unwrap();
    let direct = rewrite_direct::<f64>(&view, t, t0, t1, y, &[], &[m], &cfg()).unwrap();
    // true ATE is 0.8 * 0.8 = 0.64, true NDE is 0
    assert!((total.delta.unwrap() - 0.64).abs() < 0.03);
    assert!(direct.delta.unwrap().abs() < 0.03);
    assert!(total.significance.unwrap().p_value < 0.01);
    assert!(direct.significance.unwrap().p_value >= 0.01);
}

#[test]
fn single_attribute_takes_full_responsibility() {
    let ds = simpson();
    let view = DataView::all(&ds);
    let r = responsibility(&view, AttrId(0), &[AttrId(1)]).unwrap().unwrap();
    assert_eq!(r.len(), 1);
    assert!((r[0].rho - 1.0).abs() < 1e-12);
}

#[test]
fn independent_attribute_gets_no_responsibility() {
    // Z2 is replicated uniformly over every (T, Z1) cell.
    let cells: [(&str, &str, usize); 4] = [("a", "p", 30), ("a", "q", 10), ("b", "p", 5), ("b", "q", 25)];
    let mut rows: Vec<(Vec<&str>, usize)> = Vec::new();
    for (t, z1, n) in cells {
        for z2 in ["u", "v", "w"] {
            rows.push((vec![t, z1, z2, "0"], n));
        }
    }
    let rows: Vec<(&[&str], usize)> = rows.iter().map(|(v, n)| (&v[..], *n)).collect();
    let ds = from_counts(&["T", "Z1", "Z2", "Y"], &rows);
    let view = DataView::all(&ds);
    let v = ids(&ds, &["Z2", "Z1"]);
    let r = responsibility(&view, AttrId(0), &v).unwrap().unwrap();
    assert_eq!(ds.name(r[0].attr), "Z1");
    assert!((r[0].rho - 1.0).abs() < 1e-9);
    assert!(r[1].rho.abs() < 1e-9);
}

#[test]
fn zero_denominator_gives_no_attribution() {
    let ds = from_counts(&["T", "Z"], &[(&["a", "p"], 5), (&["b", "p"], 5), (&["a", "q"], 5), (&["b", "q"], 5)]);
    let view = DataView::all(&ds);
    assert!(responsibility(&view, AttrId(0), &[AttrId(1)]).unwrap().is_none());
}

#[test]
fn planted_triple_ranks_first() {
    let mut rows: Vec<(Vec<&str>, usize)> = Vec::new();
    for t in ["a", "b"] {
        for y in ["0", "1"] {
            for z in ["p", "q", "r"] {
                rows.push((vec![t, y, z], 10));
            }
        }
    }
    rows.push((vec!["b", "1", "r"], 200));
    let rows: Vec<(&[&str], usize)> = rows.iter().map(|(v, n)| (&v[..], *n)).collect();
    let ds = from_counts(&["T", "Y", "Z"], &rows);
    let view = DataView::all(&ds);
    let top = fine_explanations(&view, AttrId(0), AttrId(1), AttrId(2), 3).unwrap();
    assert_eq!(top.len(), 3);
    let first = &top[0];
    assert_eq!((ds.decode(AttrId(0), first.t), ds.decode(AttrId(1), first.y), ds.decode(AttrId(2), first.z)), ("b", "1", "r"));
    assert!(first.kappa_tz > 0.0 && first.kappa_yz > 0.0);
    // (b, 0, r) shares its κ_tz cell and (a, 1, r) its κ_yz cell
    assert_eq!(first.borda, 2 * (12 - 2));
}

#[test]
fn independent_attribute_has_no_fine_explanations() {
    let ds = from_counts(
        &["T", "Y", "Z"],
        &[(&["a", "0", "p"], 4), (&["b", "1", "p"], 4), (&["a", "0", "q"], 4), (&["b", "1", "q"], 4)],
    );
    let view = DataView::all(&ds);
    assert!(fine_explanations(&view, AttrId(0), AttrId(1), AttrId(2), 5).unwrap().is_empty());
}

#[test]
fn verdict_ignores_attribute_order() {
    let dag = binary_dag(&["A", "B", "T"], &[("A", "T"), ("B", "T")]);
    let ds = sample(&dag, 2_000, 4);
    let view = DataView::all(&ds);
    let t = ds.attr("T").unwrap();
    let ab = detect_bias(&view, t, &ids(&ds, &["A", "B"]), &cfg()).unwrap();
    let ba = detect_bias(&view, t, &ids(&ds, &["B", "A"]), &cfg()).unwrap();
    assert_eq!(ab, ba);
}

#[test]
fn constant_attribute_is_balanced() {
    let ds = from_counts(&["T", "Z"], &[(&["a", "p"], 5), (&["b", "p"], 7)]);
    let view = DataView::all(&ds);
    let v = detect_bias(&view, AttrId(0), &[AttrId(1)], &cfg()).unwrap();
    assert_eq!(v.balance, Balance::Balanced);
    assert_eq!(v.p_value(), Some(1.0));
}

#[test]
fn single_arm_is_undetermined() {
    let ds = from_counts(&["T", "Z"], &[(&["a", "p"], 5), (&["a", "q"], 7)]);
    let view = DataView::all(&ds);
    assert_eq!(detect_bias(&view, AttrId(0), &[AttrId(1)], &cfg()).unwrap().balance, Balance::Undetermined);
}

fn spec(t0: &str, t1: &str) -> QuerySpec {
    QuerySpec {
        treatment: "T".into(),
        t0: t0.into(),
        t1: t1.into(),
        outcomes: vec!["Y".into()],
        groupby: Vec::new(),
        context: Context::all(),
        effect: EffectKind::Total,
    }
}

#[test]
fn analyze_flags_simpson_reversal() {
    let ds = simpson();
    let cfg = AnalysisConfig { covariates: Some(vec!["Stone".into()]), ..Default::default() };
    let report = analyze(&ds, &spec("B", "A"), &cfg).unwrap();
    assert!(report.discovery.supplied);
    assert_eq!(report.contexts.len(), 1);
    let o = &report.contexts[0].outcomes[0];
    assert_eq!(o.verdict.balance, Balance::Biased);
    assert_eq!(o.responsibility.as_ref().unwrap()[0].attribute, "Stone");
    assert!(o.naive.delta.unwrap() < 0.0 && o.total.delta.unwrap() > 0.0);
    assert!(o.reversal);
    assert!(report.summary_table().contains("sign reversal"));
    assert!(!o.fine.is_empty());
    assert!(report.rewritten_sql.contains("count(DISTINCT T) = 2"));
}

#[test]
fn analyze_discovers_confounder() {
    let ds = simpson();
    let report = analyze(&ds, &spec("B", "A"), &AnalysisConfig::default()).unwrap();
    assert!(!report.discovery.supplied);
    assert_eq!(report.discovery.covariates, vec!["Stone"]);
    assert!(report.contexts[0].outcomes[0].total.delta.unwrap() > 0.0);
}

#[test]
fn analyze_balanced_fixture_is_unbiased() {
    let mut rows: Vec<(Vec<&str>, usize)> = Vec::new();
    for (z, ya, yb) in [("p", 3, 7), ("q", 6, 2), ("r", 5, 5)] {
        rows.push((vec!["a", z, "1"], ya));
        rows.push((vec!["a", z, "0"], 10 - ya));
        rows.push((vec!["b", z, "1"], yb));
        rows.push((vec!["b", z, "0"], 10 - yb));
    }
    let rows: Vec<(&[&str], usize)> = rows.iter().map(|(v, n)| (&v[..], *n)).collect();
    let ds = from_counts(&["T", "Z", "Y"], &rows);
    let cfg = AnalysisConfig { covariates: Some(vec!["Z".into()]), ..Default::default() };
    let report = analyze(&ds, &spec("a", "b"), &cfg).unwrap();
    let o = &report.contexts[0].outcomes[0];
    assert_eq!(o.verdict.balance, Balance::Balanced);
    assert!(o.responsibility.is_none() && o.fine.is_empty());
    assert!((o.naive.delta.unwrap() - o.total.delta.unwrap()).abs() < 1e-12);
    assert!(report.summary_table().contains("unbiased"));
}

/// Flight-delay shaped data: UA mostly flies from the delay-prone ROC, so
/// it looks worse overall but is better at every airport. Year is weakly
/// tied to the carrier.
fn flights() -> Dataset {
    let plan = [
        ("AA", "COS", 400, 10),
        ("AA", "MFE", 400, 15),
        ("AA", "MTJ", 400, 20),
        ("AA", "ROC", 100, 50),
        ("UA", "COS", 100, 5),
        ("UA", "MFE", 100, 10),
        ("UA", "MTJ", 100, 15),
        ("UA", "ROC", 500, 45),
    ];
    let mut rows: Vec<(Vec<String>, usize)> = Vec::new();
    for (carrier, airport, n, delay_pct) in plan {
        let late = n * delay_pct / 100;
        let share_2019 = if carrier == "UA" { 60 } else { 50 };
        for (delayed, count) in [("1", late), ("0", n - late)] {
            let recent = count * share_2019 / 100;
            rows.push((vec![carrier.into(), airport.into(), "2019".into(), delayed.into()], recent));
            rows.push((vec![carrier.into(), airport.into(), "2018".into(), delayed.into()], count - recent));
        }
    }
    let header: Vec<String> = ["Carrier", "Airport", "Year", "Delayed"].iter().map(|s| s.to_string()).collect();
    let records: Vec<Vec<String>> = rows.iter().flat_map(|(v, n)| std::iter::repeat_n(v.clone(), *n)).collect();
    Dataset::from_records(&header, &records).unwrap()
}

#[test]
fn flight_fixture_ranks_airport_first() {
    let ds = flights();
    let spec = QuerySpec {
        treatment: "Carrier".into(),
        t0: "AA".into(),
        t1: "UA".into(),
        outcomes: vec!["Delayed".into()],
        groupby: Vec::new(),
        context: Context::all(),
        effect: EffectKind::Direct,
    };
    let cfg = AnalysisConfig {
        covariates: Some(vec!["Airport".into(), "Year".into()]),
        mediators: Some(Vec::new()),
        ..Default::default()
    };
    let report = analyze(&ds, &spec, &cfg).unwrap();
    let o = &report.contexts[0].outcomes[0];
    assert!(o.verdict.p_value.unwrap() < 0.001);
    let rho: Vec<&str> = o.responsibility.as_ref().unwrap().iter().map(|r| r.attribute.as_str()).collect();
    assert_eq!(rho, vec!["Airport", "Year"]);
    let top = &o.fine.iter().find(|f| f.attribute == "Airport").unwrap().triples[0];
    assert_eq!((top.t.as_str(), top.y.as_str(), top.z.as_str()), ("UA", "1", "ROC"));
    assert!(o.naive.delta.unwrap() > 0.0);
    assert!(o.total.delta.unwrap() < 0.0);
    assert!(o.direct.is_some());
}

#[test]
fn contexts_follow_groupby_order() {
    let ds = from_counts(
        &["T", "G", "Y"],
        &[(&["a", "y", "1"], 3), (&["b", "y", "0"], 3), (&["a", "x", "1"], 4), (&["b", "x", "0"], 2), (&["a", "w", "1"], 5)],
    );
    let mut s = spec("a", "b");
    s.groupby = vec!["G".into()];
    let cfg = AnalysisConfig { covariates: Some(Vec::new()), ..Default::default() };
    let report = analyze(&ds, &s, &cfg).unwrap();
    let keys: Vec<&str> = report.contexts.iter().map(|c| c.key[0].as_str()).collect();
    assert_eq!(keys, vec!["w", "x", "y"]);
    assert_eq!(report.contexts[0].status, ContextStatus::Undetermined);
    assert_eq!(report.contexts[1].status, ContextStatus::Analyzed);
    assert!(report.has_undetermined());
    assert_eq!(report.contexts[1].context.to_sql(), "G = 'x'");
}

/// Direct evaluation of the adjustment formula over the rows.
fn brute_force_total(rows: &[(u8, u8, u8, u8)], t0: u8, t1: u8) -> Option<BigRational> {
    let mut blocks: BTreeMap<(u8, u8), Vec<(u8, u8)>> = BTreeMap::new();
    for &(t, z1, z2, y) in rows {
        if t == t0 || t == t1 {
            blocks.entry((z1, z2)).or_default().push((t, y));
        }
    }
    let kept: Vec<&Vec<(u8, u8)>> =
        blocks.values().filter(|b| b.iter().any(|r| r.0 == t0) && b.iter().any(|r| r.0 == t1)).collect();
    let n: usize = kept.iter().map(|b| b.len()).sum();
    if n == 0 {
        return None;
    }
    let mean = |b: &Vec<(u8, u8)>, arm: u8| {
        let ys: Vec<i64> = b.iter().filter(|r| r.0 == arm).map(|r| r.1 as i64).collect();
        q(ys.iter().sum(), ys.len() as i64)
    };
    let mut delta = BigRational::zero();
    for b in kept {
        delta += q(b.len() as i64, n as i64) * (mean(b, t1) - mean(b, t0));
    }
    Some(delta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_matches_brute_force(rows in prop::collection::vec((0u8..3, 0u8..3, 0u8..2, 0u8..2), 2..100)) {
        let header: Vec<String> = ["T", "Z1", "Z2", "Y"].iter().map(|s| s.to_string()).collect();
        let mut records: Vec<Vec<String>> = rows.iter().map(|r| vec![r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string()]).collect();
        // every category appears so encoding is total
        records.push(vec!["0".into(), "0".into(), "0".into(), "0".into()]);
        records.push(vec!["1".into(), "0".into(), "0".into(), "1".into()]);
        let mut all = rows.clone();
        all.push((0, 0, 0, 0));
        all.push((1, 0, 0, 1));
        let ds = Dataset::from_records(&header, &records).unwrap();
        let view = DataView::all(&ds);
        let [t, z1, z2, y] = ids(&ds, &["T", "Z1", "Z2", "Y"])[..] else { unreachable!() };
        let (t0, t1) = codes(&ds, t, "0", "1");
        let est: ExactEstimate = rewrite_total(&view, t, t0, t1, y, &[z2, z1], &TestConfig { method: causalq::indep::TestMethod::Chi2, ..Default::default() }).unwrap();
        prop_assert_eq!(est.delta.clone(), brute_force_total(&all, 0, 1));
        let f = est.to_f64();
        prop_assert!((0.0..=1.0).contains(&f.matched_fraction));
        for avg in [f.t0_average, f.t1_average].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&avg));
        }
    }

    #[test]
    fn responsibilities_are_a_distribution(rows in prop::collection::vec((0u8..2, 0u8..3, 0u8..3), 10..120)) {
        let header: Vec<String> = ["T", "A", "B"].iter().map(|s| s.to_string()).collect();
        let records: Vec<Vec<String>> = rows.iter().map(|r| vec![r.0.to_string(), r.1.to_string(), r.2.to_string()]).collect();
        let ds = Dataset::from_records(&header, &records).unwrap();
        let view = DataView::all(&ds);
        if let Some(r) = responsibility(&view, AttrId(0), &[AttrId(1), AttrId(2)]).unwrap() {
            let sum: f64 = r.iter().map(|e| e.rho).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(r.iter().all(|e| (0.0..=1.0).contains(&e.rho)));
            prop_assert!(r.windows(2).all(|w| w[0].rho >= w[1].rho));
        }
    }
}
