//! Public API end to end: generate, analyze, schedule, aggregate.

use txconflict_core::aggregate::{aggregate, DEFAULT_THRESHOLDS};
use txconflict_core::gen::{generate, worked_example, GeneratorParams};
use txconflict_core::metrics::longest_conflict_chain;
use txconflict_core::{
    analyze_block, build_graph, filter_for_analysis, level_schedule, speedup_report, AggregateMode, AnalysisConfig,
    BlockMetrics, Chain, Workers,
};

fn corpus() -> Vec<BlockMetrics> {
    let cfg = AnalysisConfig::for_chain(Chain::Generic);
    (0..120u64)
        .map(|seed| {
            let params = GeneratorParams {
                seed,
                block_number: 1000 + seed,
                n_txs: (seed as usize * 7) % 90,
                n_keys: 20 + (seed as usize * 13) % 400,
                skew: (seed % 5) as f64 * 0.4,
                write_prob: (seed % 4) as f64 / 3.0,
                set_size: (1, 5),
            };
            analyze_block(&generate(&params).unwrap(), &cfg)
        })
        .collect()
}

#[test]
fn block_metric_invariants() {
    for m in corpus() {
        assert!(m.independent_count <= m.n_analyzed);
        assert!(m.longest_chain_len <= m.n_analyzed);
        assert!(m.densest_family_size <= m.n_analyzed);
        assert!(m.write_write_conflicts <= m.total_conflicts);
        assert_eq!(m.family_count >= 1, m.n_analyzed >= 1);
        assert_eq!(m.empty, m.n_analyzed == 0);
        assert_eq!(m.longest_chain.len(), m.longest_chain_len);
        let per_kind: usize = m.per_kind.values().map(|k| k.analyzed).sum();
        assert_eq!(per_kind, m.n_analyzed);
    }
}

#[test]
fn speedup_is_bounded_by_chain() {
    let cfg = AnalysisConfig::for_chain(Chain::Generic);
    for seed in 0..40 {
        let wl = generate(&GeneratorParams { seed, n_txs: 70, n_keys: 60, ..Default::default() }).unwrap();
        let g = build_graph(&filter_for_analysis(&wl, &cfg), &cfg);
        let chain = longest_conflict_chain(&g).len;
        let report = speedup_report(&g, &[Workers::Bounded(1), Workers::Bounded(4)]).unwrap();
        assert_eq!(report.len(), 3);
        assert_eq!(report[0].makespan, 70);
        let unbounded = report.last().unwrap();
        assert_eq!(unbounded.workers, Workers::Unbounded);
        assert_eq!(unbounded.makespan, chain);
        assert_eq!(level_schedule(&g).rounds.len(), chain);
        assert!(report.windows(2).all(|w| w[0].speedup <= w[1].speedup));
    }
}

#[test]
fn aggregate_is_order_independent() {
    let metrics = corpus();
    let mut reversed = metrics.clone();
    reversed.reverse();
    for mode in [AggregateMode::PerBlock, AggregateMode::Pooled] {
        let a = aggregate(&metrics, "p", &DEFAULT_THRESHOLDS, mode).unwrap();
        let b = aggregate(&reversed, "p", &DEFAULT_THRESHOLDS, mode).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks, metrics.len());
        assert!(a.thresholds.windows(2).all(|w| w[0].blocks >= w[1].blocks));
        assert!(a.thresholds.iter().all(|t| t.blocks <= a.blocks));
    }
}

#[test]
fn worked_example_through_public_api() {
    let m = analyze_block(&worked_example(), &AnalysisConfig::for_chain(Chain::Generic));
    let agg = aggregate(std::slice::from_ref(&m), "we", &DEFAULT_THRESHOLDS, AggregateMode::PerBlock).unwrap();
    assert_eq!(agg.independent_pct.mean, 37.5);
    assert_eq!(agg.total_conflicts.max, 6.0);
    assert_eq!(agg.write_write_share_pct.mean, 50.0);
    assert_eq!((agg.first_block, agg.last_block), (0, 0));
}
