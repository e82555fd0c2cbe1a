use super::*;

#[test]
fn formula_examples() {
    assert_eq!(formula_params(CellKind::Node, 128, 8, None).unwrap(), 9_216);
    assert_eq!(formula_params(CellKind::Ltc, 128, 8, None).unwrap(), 35_840);
    assert_eq!(formula_params(CellKind::Ctrnn, 1, 1, None).unwrap(), 3);
    assert!(formula_params(CellKind::Ctgru, 4, 4, None).is_err());
    assert!(formula_params(CellKind::Gru, 4, 4, None).is_err());
}

#[test]
fn actual_counts() {
    let (ltc, breakdown) = actual_params(&CellConfig::new(CellKind::Ltc, 4, 8, 1)).unwrap();
    assert_eq!(ltc, 425);
    assert_eq!(breakdown.iter().map(|(_, c)| c).sum::<u64>(), 425);
    assert!(breakdown.windows(2).all(|w| w[0].0 < w[1].0));
    let (lstm, _) = actual_params(&CellConfig::new(CellKind::Lstm, 4, 8, 1)).unwrap();
    assert_eq!(lstm, 4 * 8 * 12 + 4 * 8 + 9);
    assert!(actual_params(&CellConfig::new(CellKind::Ltc, 4, 0, 1)).is_err());
}

#[test]
fn ltc_count_is_quadratic_in_hidden_size() {
    let ratio = |n: usize| actual_params(&CellConfig::new(CellKind::Ltc, 4, n, 1)).unwrap().0 as f64 / (n * n) as f64;
    assert!((ratio(512) - 4.0).abs() < 0.05);
    assert!((ratio(512) - 4.0).abs() < (ratio(64) - 4.0).abs());
}

#[test]
fn lstm_unit_flops() {
    let f = step_flops(&CellConfig::new(CellKind::Lstm, 1, 1, 1));
    assert_eq!(
        f,
        StepFlops {
            macs: 8,
            bias_adds: 4,
            activations: 5,
            elementwise: 4
        }
    );
}

#[test]
fn flops_scale_with_unfolds() {
    for kind in [CellKind::Ltc, CellKind::Ctrnn, CellKind::Node, CellKind::Ctgru] {
        let c = CellConfig::new(kind, 3, 5, 1);
        let once = step_flops(&c.clone().with_unfolds(3));
        let twice = step_flops(&c.with_unfolds(6));
        assert_eq!(twice.total(), 2 * once.total());
        assert_eq!(twice.macs, 2 * once.macs);
    }
}

#[test]
fn node_and_ctrnn_differ_by_decay_terms() {
    let n = 7;
    let c = CellConfig::new(CellKind::Ctrnn, 3, n, 1).with_unfolds(1);
    let d = CellConfig::new(CellKind::Node, 3, n, 1).with_unfolds(1).with_solver(Solver::Euler);
    assert_eq!(step_flops(&c).total() - step_flops(&d).total(), 2 * n as u64);
}

#[test]
fn footprint_cases() {
    let c = CellConfig::new(CellKind::Ltc, 4, 8, 1);
    let empty = memory_footprint(&c, 0, 32).unwrap();
    assert_eq!(empty.activation_bytes, 0);
    assert_eq!(memory_footprint(&c, 16, 0).unwrap().activation_bytes, 0);
    assert_eq!(empty.param_bytes, 425 * 8);
    assert_eq!(empty.optimizer_bytes, 2 * 425 * 8);

    let a: Vec<u64> = [8, 16, 32]
        .into_iter()
        .map(|t| memory_footprint(&c, 4, t).unwrap().activation_bytes)
        .collect();
    assert_eq!(a[1], 2 * a[0]);
    assert_eq!(a[2], 4 * a[0]);
    let r = memory_footprint(&c, 4, 32).unwrap();
    assert_eq!(r.total_bytes, r.parts_sum());

    let lstm = memory_footprint(&CellConfig::new(CellKind::Lstm, 4, 8, 1), 16, 32).unwrap();
    let gru = memory_footprint(&CellConfig::new(CellKind::Gru, 4, 8, 1), 16, 32).unwrap();
    assert!(lstm.total_bytes > gru.total_bytes);
}

#[test]
fn published_table_report() {
    let rows = table1_report().unwrap();
    let printed: Vec<u64> = rows.iter().map(|r| r.table1_printed.unwrap()).collect();
    assert_eq!(printed, vec![8_320, 8_192, 32_896, 24_704, 32_896]);
    let formulas: Vec<u64> = rows.iter().map(|r| r.formula_count.unwrap()).collect();
    assert_eq!(formulas, vec![10_240, 9_216, 36_864, 18_504, 35_840]);
    assert!(rows.iter().all(BenchRow::discrepancy));
    let mut out = Vec::new();
    write_bench_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("kind,n,k,m,formula_count,table1_printed,actual_count,flops_per_step,total_bytes\n"));
    assert!(text.contains("node,128,8,,9216,8192,"));
}

#[test]
fn ctgru_row_requires_m() {
    assert!(bench_row(CellKind::Ctgru, BenchDims::default()).is_err());
    let row = bench_row(
        CellKind::Gru,
        BenchDims {
            n: 128,
            k: 8,
            ..BenchDims::default()
        },
    )
    .unwrap();
    assert_eq!(row.formula_count, None);
    assert!(!row.discrepancy());
}
