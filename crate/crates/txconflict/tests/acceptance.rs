//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Every reference value here comes from an oracle written in this file
//! (brute-force path enumeration, breadth-first components, a toy ledger
//! interpreter) or from hand-checked fixtures, never from the code under
//! test.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use txconflict::ingest::ethereum::create_address;
use txconflict::load::load_workload;
use txconflict_core::gen::{generate, GeneratorParams};
use txconflict_core::key::Address;
use txconflict_core::metrics::{conflict_families, longest_conflict_chain};
use txconflict_core::{
    analyze_block, bounded_schedule, level_schedule, AccessMode, AccessSet, AnalysisConfig, BlockWorkload, Chain,
    ConflictGraph, StateKey, Transaction, TransactionKind, Workers,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Conflict predicate straight from the definition: some key is written by
/// both, or written by one and read by the other.
fn oracle_conflicts(a: &AccessSet, b: &AccessSet) -> bool {
    let hit = |x: &BTreeSet<StateKey>, y: &BTreeSet<StateKey>| x.iter().any(|k| y.contains(k));
    hit(&a.writes, &b.writes) || hit(&a.writes, &b.reads) || hit(&a.reads, &b.writes)
}

fn oracle_adjacency(access: &[AccessSet]) -> Vec<Vec<usize>> {
    let n = access.len();
    let mut succ = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if oracle_conflicts(&access[i], &access[j]) {
                succ[i].push(j);
            }
        }
    }
    succ
}

/// Longest path in vertices by trying every path.
fn oracle_longest_path(succ: &[Vec<usize>]) -> usize {
    fn walk(v: usize, succ: &[Vec<usize>]) -> usize {
        1 + succ[v].iter().map(|&w| walk(w, succ)).max().unwrap_or(0)
    }
    (0..succ.len()).map(|v| walk(v, succ)).max().unwrap_or(0)
}

/// Connected components by breadth-first search.
fn oracle_components(succ: &[Vec<usize>]) -> BTreeSet<Vec<usize>> {
    let n = succ.len();
    let mut undirected = vec![Vec::new(); n];
    for (i, out) in succ.iter().enumerate() {
        for &j in out {
            undirected[i].push(j);
            undirected[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in &undirected[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.insert(comp);
    }
    out
}

/// Random access sets over a small key pool; a key may be both read and
/// written by one transaction.
fn random_access(rng: &mut ChaCha8Rng, n: usize, pool: usize) -> Vec<AccessSet> {
    (0..n)
        .map(|_| {
            let mut reads = BTreeSet::new();
            let mut writes = BTreeSet::new();
            for k in 0..pool {
                let key = StateKey::generic(format!("k{k}"));
                if rng.random_bool(0.15) {
                    reads.insert(key.clone());
                }
                if rng.random_bool(0.1) {
                    writes.insert(key);
                }
            }
            AccessSet { reads, writes }
        })
        .collect()
}

fn workload_from(chain: Chain, access: Vec<AccessSet>, metadata: BTreeMap<String, String>) -> BlockWorkload {
    let kind = match chain {
        Chain::Solana => TransactionKind::SolanaNonVote,
        Chain::Ethereum => TransactionKind::ContractCall,
        Chain::Generic => TransactionKind::Generic,
    };
    let txs = access
        .into_iter()
        .enumerate()
        .map(|(i, access)| Transaction { id: format!("t{i}"), preset_index: i, kind, success: true, access })
        .collect();
    BlockWorkload::new(chain, 0, txs, metadata).expect("valid workload")
}

fn generated(seed: u64, n_txs: usize, n_keys: usize, skew: f64, write_prob: f64) -> BlockWorkload {
    generate(&GeneratorParams {
        seed,
        block_number: seed,
        n_txs,
        n_keys,
        skew,
        write_prob,
        set_size: (1, 4.min(n_keys)),
    })
    .expect("valid generator parameters")
}

/// Mixed corpus of small graphs: half generated, half arbitrary sets.
fn small_corpus(count: usize, seed: u64) -> Vec<Vec<AccessSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(0..=10);
            if i % 2 == 0 {
                let keys = rng.random_range(2..=20);
                let wl = generated(seed ^ i as u64, n, keys, rng.random_range(0.0..2.0), rng.random_range(0.0..=1.0));
                wl.transactions().iter().map(|t| t.access.clone()).collect()
            } else {
                let pool = rng.random_range(1..=12);
                random_access(&mut rng, n, pool)
            }
        })
        .collect()
}

fn criterion_1_golden() -> Check {
    let start = Instant::now();
    let wl = load_workload(&fixture("worked-example.json")).map_err(|e| e.to_string())?;
    let m = analyze_block(&wl, &AnalysisConfig::for_chain(Chain::Generic));
    let elapsed = start.elapsed();
    let got = (
        m.independent_count,
        m.independent_pct,
        m.longest_chain_len,
        m.longest_chain.clone(),
        m.family_count,
        m.densest_family_size,
        m.total_conflicts,
        m.write_write_conflicts,
    );
    let want = (3, 37.5, 3, vec!["T2".to_string(), "T3".into(), "T4".into()], 5, 3, 6, 3);
    ensure(got == want, || format!("got {got:?}, want {want:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("independent 3 (37.5%), chain T2->T3->T4, 5 families, densest 3, conflicts 6/3 ww in {elapsed:?}"))
}

fn criterion_2_chain_oracle() -> Check {
    let start = Instant::now();
    let corpus = small_corpus(600, 2);
    for (i, access) in corpus.iter().enumerate() {
        let g = ConflictGraph::from_access(access);
        let succ = oracle_adjacency(access);
        for (v, out) in succ.iter().enumerate() {
            ensure(g.successors(v) == out.as_slice(), || format!("block {i}: successors of {v} differ"))?;
        }
        let dp = longest_conflict_chain(&g);
        let brute = oracle_longest_path(&succ);
        ensure(dp.len == brute, || format!("block {i}: dp {} vs brute force {brute}", dp.len))?;
        ensure(dp.path.len() == dp.len && dp.path.windows(2).all(|w| succ[w[0]].contains(&w[1])), || {
            format!("block {i}: reported path {:?} is not a chain", dp.path)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} blocks (n <= 10) agree with path enumeration in {elapsed:?}", corpus.len()))
}

fn criterion_3_family_oracle() -> Check {
    let corpus = small_corpus(600, 3);
    for (i, access) in corpus.iter().enumerate() {
        let g = ConflictGraph::from_access(access);
        let families = conflict_families(&g);
        let got: BTreeSet<Vec<usize>> = families.iter().cloned().collect();
        let want = oracle_components(&oracle_adjacency(access));
        ensure(got.len() == families.len() && got == want, || {
            format!("block {i}: families {families:?}, bfs {want:?}")
        })?;
    }
    Ok(format!("{} blocks agree with breadth-first components", corpus.len()))
}

fn criterion_4_schedule_identity() -> Check {
    let mut corpus = small_corpus(300, 4);
    for seed in 0..100 {
        let wl = generated(seed, 60, 80, 1.2, 0.5);
        corpus.push(wl.transactions().iter().map(|t| t.access.clone()).collect());
    }
    for (i, access) in corpus.iter().enumerate() {
        let g = ConflictGraph::from_access(access);
        let n = g.vertex_count();
        let chain = longest_conflict_chain(&g).len;
        let level = level_schedule(&g);
        level.validate(&g).map_err(|e| format!("block {i}: level schedule invalid: {e}"))?;
        ensure(level.rounds.len() == chain, || format!("block {i}: {} rounds vs chain {chain}", level.rounds.len()))?;
        ensure(level.workers == Workers::Unbounded && level.makespan == chain, || {
            format!("block {i}: unbounded makespan {}", level.makespan)
        })?;
        let mut previous = usize::MAX;
        for k in 1..=n.max(1) + 1 {
            let s = bounded_schedule(&g, k).map_err(|e| e.to_string())?;
            s.validate(&g).map_err(|e| format!("block {i}, k={k}: {e}"))?;
            ensure(s.makespan <= previous, || format!("block {i}: makespan rises at k={k}"))?;
            previous = s.makespan;
        }
        ensure(previous == chain, || format!("block {i}: k >= n makespan {previous} vs chain {chain}"))?;
    }
    Ok(format!("{} graphs: rounds == chain, makespan non-increasing in k, == chain at k = inf", corpus.len()))
}

/// Toy ledger: each transfer moves `amount` from `from` to `to` when the
/// balance allows it.
#[derive(Clone, Copy, Debug)]
struct Transfer {
    from: usize,
    to: usize,
    amount: u64,
}

fn apply(balances: &mut [u64], t: &Transfer) {
    if balances[t.from] >= t.amount {
        balances[t.from] -= t.amount;
        balances[t.to] += t.amount;
    }
}

fn account(i: usize) -> StateKey {
    StateKey::generic(format!("acct{i}"))
}

fn criterion_5_sequential_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let blocks = 250;
    for b in 0..blocks {
        let accounts = rng.random_range(2..=12);
        let n = rng.random_range(1..=40);
        let transfers: Vec<Transfer> = (0..n)
            .map(|_| {
                let from = rng.random_range(0..accounts);
                let mut to = rng.random_range(0..accounts - 1);
                if to >= from {
                    to += 1;
                }
                Transfer { from, to, amount: rng.random_range(1..=60) }
            })
            .collect();
        let initial: Vec<u64> = (0..accounts).map(|_| rng.random_range(0..=100)).collect();

        let mut sequential = initial.clone();
        transfers.iter().for_each(|t| apply(&mut sequential, t));

        let access: Vec<AccessSet> =
            transfers.iter().map(|t| AccessSet::new([account(t.from)], [account(t.from), account(t.to)])).collect();
        let wl = workload_from(Chain::Generic, access, BTreeMap::new());
        let g = txconflict_core::build_graph(&wl, &AnalysisConfig::for_chain(Chain::Generic));
        let mut schedules = vec![level_schedule(&g)];
        schedules.push(bounded_schedule(&g, 2).map_err(|e| e.to_string())?);

        for s in &schedules {
            // Any intra-round order.
            for _ in 0..3 {
                let mut state = initial.clone();
                for round in &s.rounds {
                    let mut order = round.clone();
                    order.shuffle(&mut rng);
                    order.iter().for_each(|&i| apply(&mut state, &transfers[i]));
                }
                ensure(state == sequential, || format!("block {b}: shuffled rounds diverge"))?;
            }
            // Truly simultaneous: every transaction of a round sees the
            // state from before the round, and the writes merge afterwards.
            let mut state = initial.clone();
            for round in &s.rounds {
                let snapshot = state.clone();
                for &i in round {
                    let mut local = snapshot.clone();
                    apply(&mut local, &transfers[i]);
                    for acct in [transfers[i].from, transfers[i].to] {
                        if local[acct] != snapshot[acct] {
                            state[acct] = local[acct];
                        }
                    }
                }
            }
            ensure(state == sequential, || format!("block {b}: snapshot rounds diverge"))?;
        }
    }
    Ok(format!("{blocks} transfer blocks: level and k=2 rounds reproduce preset-order balances"))
}

fn with_coinbase(wl: &BlockWorkload, coinbase: &StateKey) -> BlockWorkload {
    let access = wl
        .transactions()
        .iter()
        .map(|t| {
            let mut a = t.access.clone();
            a.writes.insert(coinbase.clone());
            a
        })
        .collect();
    let metadata = BTreeMap::from([("coinbase".to_string(), coinbase.encode())]);
    workload_from(wl.chain(), access, metadata)
}

fn criterion_6_coinbase_invariance() -> Check {
    let coinbase = StateKey::generic("COINBASE");
    let mut blocks = 0;
    for seed in 0..200u64 {
        let base = generated(seed, 2 + (seed as usize % 50), 200, 1.0, 0.5);
        let plain = workload_from(
            Chain::Generic,
            base.transactions().iter().map(|t| t.access.clone()).collect(),
            BTreeMap::from([("coinbase".to_string(), coinbase.encode())]),
        );
        let injected = with_coinbase(&base, &coinbase);
        for mode in [AccessMode::ReadWriteAware, AccessMode::ExclusiveAccess] {
            let mut cfg = AnalysisConfig::for_chain(Chain::Generic);
            cfg.access_mode = mode;
            cfg.coinbase_filter = true;
            let before = analyze_block(&plain, &cfg);
            let after = analyze_block(&injected, &cfg);
            ensure(before == after, || format!("seed {seed} {mode:?}: filtered metrics changed"))?;

            cfg.coinbase_filter = false;
            let raw = analyze_block(&injected, &cfg);
            ensure(raw.independent_count == 0 && raw.family_count == 1, || {
                format!("seed {seed}: unfiltered independent {} families {}", raw.independent_count, raw.family_count)
            })?;
        }
        blocks += 1;
    }
    Ok(format!("{blocks} blocks, both access modes: filter restores metrics, no filter gives 0 independent / 1 family"))
}

fn criterion_7_exclusive_dominance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = 1000;
    for case in 0..cases {
        let wl = generated(
            case,
            rng.random_range(0..=80),
            rng.random_range(1..=150),
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..=1.0),
        );
        let mut cfg = AnalysisConfig::for_chain(Chain::Generic);
        let rw = analyze_block(&wl, &cfg);
        cfg.access_mode = AccessMode::ExclusiveAccess;
        let ex = analyze_block(&wl, &cfg);
        ensure(ex.independent_pct <= rw.independent_pct, || {
            format!("case {case}: independent {} > {}", ex.independent_pct, rw.independent_pct)
        })?;
        ensure(ex.total_conflicts >= rw.total_conflicts, || {
            format!("case {case}: conflicts {} < {}", ex.total_conflicts, rw.total_conflicts)
        })?;
    }
    Ok(format!("{cases} generated workloads: exclusive never more independent, never fewer conflicts"))
}

fn keys(items: &[&str]) -> BTreeSet<StateKey> {
    items.iter().map(|s| s.parse().expect("fixture key")).collect()
}

fn criterion_8_parser_fixtures() -> Check {
    let eth = load_workload(&fixture("eth-16.block.json")).map_err(|e| e.to_string())?;
    let a = "0x00000000000000000000000000000000000000a1";
    let m = "eoa:0x0000000000000000000000000000000000c0ffee";
    let slot = |c: &str, s: u8| format!("slot:0x{c:0>40}:0x{s:064x}");
    let created: Address = a.parse().map(|from| create_address(&from, 1)).map_err(|e| format!("{e}"))?;
    let want_eth: Vec<(TransactionKind, BTreeSet<StateKey>)> = vec![
        (
            TransactionKind::EthTransfer,
            keys(&[&format!("eoa:{a}"), "eoa:0x00000000000000000000000000000000000000b2", m]),
        ),
        (
            TransactionKind::Erc20Transfer,
            keys(&["eoa:0x00000000000000000000000000000000000000d4", m, &slot("c7", 0x11), &slot("c7", 0x12)]),
        ),
        (
            TransactionKind::ContractCall,
            keys(&[
                "eoa:0x00000000000000000000000000000000000000e5",
                m,
                &slot("c9", 1),
                &slot("c9", 2),
                "code:0x00000000000000000000000000000000000000c9",
            ]),
        ),
        (TransactionKind::ContractCall, keys(&[&format!("eoa:{a}"), m, &format!("code:{created}")])),
    ];
    let got_eth: Vec<(TransactionKind, BTreeSet<StateKey>)> =
        eth.transactions().iter().map(|t| (t.kind, t.access.writes.clone())).collect();
    ensure(got_eth == want_eth, || format!("ethereum: got {got_eth:?}"))?;
    ensure(eth.transactions().iter().all(|t| t.access.reads.is_empty() && t.success), || {
        "ethereum: reads must be empty".into()
    })?;
    ensure(eth.metadata().get("coinbase").map(String::as_str) == Some(&m[4..]), || {
        "ethereum: coinbase metadata".into()
    })?;

    let sol = load_workload(&fixture("sol-300.block.json")).map_err(|e| e.to_string())?;
    let k = |i: u8| {
        let mut bytes = [0u8; 32];
        bytes[0] = 7;
        bytes[31] = i;
        StateKey::SolanaAccount(txconflict_core::key::Pubkey(bytes))
    };
    let set = |ks: &[StateKey]| ks.iter().cloned().collect::<BTreeSet<_>>();
    let program = k(100);
    let sys = |s: &str| StateKey::solana(s).expect("builtin id");
    let want_sol = vec![
        (TransactionKind::SolanaNonVote, true, set(&[k(1), k(3), program.clone()]), set(&[k(0), k(2)])),
        (
            TransactionKind::SolanaVote,
            true,
            set(&[
                sys("SysvarC1ock11111111111111111111111111111111"),
                sys("Vote111111111111111111111111111111111111111"),
            ]),
            set(&[k(8), k(9)]),
        ),
        (TransactionKind::SolanaNonVote, false, set(&[program, k(7)]), set(&[k(0), k(5), k(6)])),
    ];
    let got_sol: Vec<_> = sol
        .transactions()
        .iter()
        .map(|t| (t.kind, t.success, t.access.reads.clone(), t.access.writes.clone()))
        .collect();
    ensure(got_sol == want_sol, || format!("solana: got {got_sol:?}"))?;
    ensure(sol.block_number() == 300, || "solana: slot from file name".into())?;
    Ok("ethereum kinds and key sets, solana header partition, vote and failure flags match".into())
}

/// Published per-block reference values for recent mainnet blocks.
/// (block, analyzed, independent %, longest chain length)
const ETH_REFERENCE: [(u64, usize, f64, Option<usize>); 2] =
    [(21631012, 134, 61.94, Some(16)), (21631010, 210, 39.13, None)];
const SOL_REFERENCE: [(u64, usize); 1] = [(314184248, 781)];

fn criterion_9_mainnet_regression() -> Option<Check> {
    let dir = PathBuf::from(std::env::var_os("TXCONFLICT_REGRESSION_DIR")?);
    let mut checked = Vec::new();
    for (block, n, pct, chain) in ETH_REFERENCE {
        let path = dir.join(format!("eth-{block}.block.json"));
        if !path.exists() {
            continue;
        }
        let m = load_workload(&path)
            .map(|wl| analyze_block(&wl, &AnalysisConfig::for_chain(Chain::Ethereum)))
            .map_err(|e| e.to_string());
        let m = match m {
            Ok(m) => m,
            Err(e) => return Some(Err(e)),
        };
        if m.n_analyzed != n
            || ((m.independent_pct * 100.0).round() / 100.0 - pct).abs() > 0.01 + 1e-9
            || chain.is_some_and(|c| c != m.longest_chain_len)
        {
            return Some(Err(format!(
                "eth {block}: n {} independent {:.2}% chain {}",
                m.n_analyzed, m.independent_pct, m.longest_chain_len
            )));
        }
        checked.push(block);
    }
    for (slot, non_vote) in SOL_REFERENCE {
        let path = dir.join(format!("sol-{slot}.block.json"));
        if !path.exists() {
            continue;
        }
        match load_workload(&path).map(|wl| analyze_block(&wl, &AnalysisConfig::for_chain(Chain::Solana))) {
            Ok(m) if m.n_analyzed == non_vote => checked.push(slot),
            Ok(m) => return Some(Err(format!("sol {slot}: {} non-vote transactions", m.n_analyzed))),
            Err(e) => return Some(Err(e.to_string())),
        }
    }
    if checked.is_empty() {
        return None;
    }
    Some(Ok(format!("reference blocks {checked:?} reproduce the quoted rows")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 golden worked example", criterion_1_golden),
        ("2 longest chain vs path enumeration", criterion_2_chain_oracle),
        ("3 families vs breadth-first search", criterion_3_family_oracle),
        ("4 schedule rounds == chain, makespan monotone", criterion_4_schedule_identity),
        ("5 round execution == sequential execution", criterion_5_sequential_equivalence),
        ("6 coinbase invariance", criterion_6_coinbase_invariance),
        ("7 exclusive-access dominance", criterion_7_exclusive_dominance),
        ("8 parser fixtures", criterion_8_parser_fixtures),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(name);
            }
        }
    }
    match criterion_9_mainnet_regression() {
        None => println!(
            "SKIP criterion 9 mainnet regression: set TXCONFLICT_REGRESSION_DIR to a cache holding the reference blocks"
        ),
        Some(Ok(detail)) => println!("PASS criterion 9 mainnet regression: {detail}"),
        Some(Err(why)) => {
            println!("FAIL criterion 9 mainnet regression: {why}");
            failed.push("9 mainnet regression");
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
