//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance and time budget is pinned here; the brute-force oracles
//! are independent of the mining path they check.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use redescriptions::adtree::{build_adtree, ClassCounter, ClassHistogram};
use redescriptions::bitset::BitSet;
use redescriptions::canon::canonicalize;
use redescriptions::cli::{eval_text, run_cli};
use redescriptions::engine::{run, MinerConfig};
use redescriptions::expr::{
    entropy_distance, jaccard, Coefficient, Literal, SetExpression, Threshold,
};
use redescriptions::oracle::{contains, enumerate, OracleConfig};
use redescriptions::store::FamilyId;

fn assert_within(elapsed: Duration, budget: Duration, what: &str) {
    assert!(
        elapsed <= budget,
        "{what} took {elapsed:?}, budget {budget:?}"
    );
}

#[test]
fn criterion_01_paper_value_jaccard_checks() {
    let started = Instant::now();
    let store = common::countries_store();

    let out = eval_text(&store, "defense_budget_over_30b", "unsc_permanent").unwrap();
    assert!(
        out.starts_with("jaccard 0.428571 (3/7)\n"),
        "unexpected eval output:\n{out}"
    );

    let out = eval_text(&store, "declared_nuclear", "unsc_permanent").unwrap();
    assert!(
        out.starts_with("jaccard 0.625000 (5/8)\n"),
        "unexpected eval output:\n{out}"
    );

    let elapsed = started.elapsed();
    assert_within(elapsed, Duration::from_millis(100), "criterion 1");
    println!("PASS criterion 1: country fixtures score 3/7 and 5/8 exactly ({elapsed:?})");
}

#[test]
fn criterion_02_working_example_validity() {
    let started = Instant::now();
    let store = common::fig1_store();
    let pairs = [
        ("(X3 & X1) | (X4 & !X3)", "(Y3 & !Y2) | (Y1 & !Y3)"),
        ("X3 & !X1", "!Y3 & !Y1"),
        ("!X3 & !X4", "Y3 & Y2"),
        ("(X3 & X1) | (X4 & !X3)", "Y4"),
        ("!X3 & !X4", "Y3 & !Y4"),
        ("X3 & !X1", "!Y3 & !Y4"),
    ];
    for (lhs, rhs) in pairs {
        let out = eval_text(&store, lhs, rhs).unwrap();
        let mut lines = out.lines();
        assert_eq!(
            lines.next(),
            Some("jaccard 1.000000 (1/1)"),
            "{lhs} <=> {rhs}:\n{out}"
        );
        assert_eq!(
            lines.next(),
            Some("complement_jaccard 1.000000 (1/1)"),
            "{lhs} <=> {rhs}:\n{out}"
        );
    }
    let elapsed = started.elapsed();
    assert_within(elapsed, Duration::from_millis(100), "criterion 2");
    println!("PASS criterion 2: all six textbook redescriptions score 1/1 with complement 1/1 ({elapsed:?})");
}

#[test]
fn criterion_03_working_example_mining() {
    let started = Instant::now();
    let mut best = 0usize;
    for seed in 0..10u64 {
        let store = common::fig1_store();
        let config = MinerConfig {
            theta: Threshold::Exact { num: 1, den: 1 },
            depth_top: 2,
            depth_bottom: 2,
            max_idle_alternations: 10,
            seed,
            ..MinerConfig::default()
        };
        let output = run(store, &config).unwrap();
        let reference = common::fig1_store();
        let mut keys = std::collections::BTreeSet::new();
        let mut count = 0usize;
        for mined in &output.redescriptions {
            let r = &mined.redescription;
            assert_eq!(r.jaccard, Coefficient::one());
            // supports must be proper and non-empty
            assert!(r.lhs_support.is_proper_nonempty());
            assert!(r.rhs_support.is_proper_nonempty());
            // distinct by canonical rendering
            let key = (
                r.lhs.render(&reference.x),
                r.rhs.render(&reference.y),
            );
            if keys.insert(key) {
                count += 1;
            }
        }
        best = best.max(count);
    }
    let elapsed = started.elapsed();
    assert!(
        best >= 3,
        "no seed in 0..10 produced >= 3 distinct exact redescriptions (best {best})"
    );
    assert_within(elapsed, Duration::from_secs(1), "criterion 3");
    println!("PASS criterion 3: mining the working example found {best} exact redescriptions for the best seed ({elapsed:?})");
}

#[test]
fn criterion_04_oracle_soundness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c4);
    let mut emitted_total = 0usize;
    for instance in 0..200u64 {
        let n_objects = rng.gen_range(3..=8);
        let n_x = rng.gen_range(2..=5);
        let n_y = rng.gen_range(2..=5);
        let store = common::random_store(&mut rng, n_objects, n_x, n_y);
        let config = MinerConfig {
            theta: Threshold::Exact { num: 1, den: 2 },
            depth_top: 2,
            depth_bottom: 2,
            seed: instance,
            ..MinerConfig::default()
        };
        let oracle_config = OracleConfig {
            theta: config.theta,
            depth_lhs: 2,
            depth_rhs: 2,
            min_support: config.min_support,
            bias: config.bias,
            max_expressions: 1_000_000,
        };
        let entries = enumerate(&store, &oracle_config).unwrap();
        let output = run(store, &config).unwrap();
        for mined in &output.redescriptions {
            let r = &mined.redescription;
            assert!(
                contains(&entries, &r.lhs_support, &r.rhs_support, r.jaccard),
                "instance {instance}: emitted support pair missing from the oracle \
                 (lhs {:?}, rhs {:?}, J {})",
                r.lhs_support,
                r.rhs_support,
                r.jaccard
            );
            emitted_total += 1;
        }
    }
    let elapsed = started.elapsed();
    assert_within(elapsed, Duration::from_secs(30), "criterion 4");
    println!("PASS criterion 4: {emitted_total} emitted redescriptions over 200 random instances all appear in the brute-force enumeration ({elapsed:?})");
}

/// Row-scan reference for AD-tree queries.
fn scan_counts(
    store: &redescriptions::store::DescriptorFamily,
    labels: &[usize],
    num_classes: usize,
    query: &[Literal],
) -> ClassHistogram {
    let mut h = ClassHistogram::zeros(num_classes);
    'obj: for pos in 0..labels.len() {
        for lit in query {
            if store.descriptor(lit.index).members.contains(pos) == lit.negated {
                continue 'obj;
            }
        }
        h.counts[labels[pos]] += 1;
        h.total += 1;
    }
    h
}

#[test]
fn criterion_05_adtree_exactness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c5);
    let mut queries_checked = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..=12);
        // a one-object universe admits no proper non-empty descriptor
        let n_features = if n >= 2 { rng.gen_range(1..=8) } else { 0 };
        let family = common::random_family(&mut rng, n, n_features, FamilyId::X, "D");
        let num_classes = rng.gen_range(1..=4);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..num_classes)).collect();
        let tree = build_adtree(&family, &labels, num_classes, 3).unwrap();

        // every query to depth 3: all sign patterns over all feature
        // combinations of size 0..=3
        let f = family.len();
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for a in 0..f {
            combos.push(vec![a]);
            for b in a + 1..f {
                combos.push(vec![a, b]);
                for c in b + 1..f {
                    combos.push(vec![a, b, c]);
                }
            }
        }
        for combo in &combos {
            for signs in 0..(1u32 << combo.len()) {
                let query: Vec<Literal> = combo
                    .iter()
                    .enumerate()
                    .map(|(i, &idx)| Literal {
                        index: idx,
                        negated: signs >> i & 1 == 1,
                    })
                    .collect();
                let expected = scan_counts(&family, &labels, num_classes, &query);
                let got = tree.query_counts(&query).unwrap();
                assert_eq!(got, expected, "query {query:?}");
                queries_checked += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    assert_within(elapsed, Duration::from_secs(10), "criterion 5");
    println!("PASS criterion 5: {queries_checked} AD-tree queries matched row scans exactly over 100 instances ({elapsed:?})");
}

#[test]
fn criterion_06_planted_recovery() {
    let started = Instant::now();
    let seeds = 50u64;
    let mut recovered = 0usize;
    for seed in 0..seeds {
        let instance = common::planted_instance(seed);
        let support = instance.support.clone();
        let config = MinerConfig {
            theta: Threshold::Exact { num: 9, den: 10 },
            depth_top: 2,
            depth_bottom: 2,
            max_idle_alternations: 10,
            seed,
            ..MinerConfig::default()
        };
        let output = run(instance.store, &config).unwrap();
        if output.redescriptions.iter().any(|m| {
            m.redescription.lhs_support == support && m.redescription.rhs_support == support
        }) {
            recovered += 1;
        }
    }
    let elapsed = started.elapsed();
    let rate = recovered as f64 / seeds as f64;
    assert!(
        rate >= 0.8,
        "planted support pair recovered in only {recovered}/{seeds} seeds"
    );
    assert_within(elapsed, Duration::from_secs(60), "criterion 6");
    println!(
        "PASS criterion 6: planted redescription recovered in {recovered}/{seeds} seeds ({elapsed:?})"
    );
}

#[test]
fn criterion_07_paper_scale_throughput() {
    let started = Instant::now();
    let store = common::paper_scale_store(7);
    let config = MinerConfig {
        theta: Threshold::Exact { num: 1, den: 2 },
        depth_top: 2,
        depth_bottom: 2,
        max_idle_alternations: 10,
        seed: 7,
        ..MinerConfig::default()
    };
    let output = run(store, &config).unwrap();
    let elapsed = started.elapsed();
    assert_within(elapsed, Duration::from_secs(60), "criterion 7");
    println!(
        "PASS criterion 7: 74x824 synthetic run finished in {elapsed:?} \
         ({} alternations, {} redescriptions, stop: {})",
        output.report.rows.len(),
        output.redescriptions.len(),
        output.report.stop
    );
}

#[test]
fn criterion_08_metric_properties() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c8);

    for _ in 0..100 {
        let n = rng.gen_range(1..=50);
        let a = BitSet::from_positions(n, (0..n).filter(|_| rng.gen_bool(0.4)));
        let d = entropy_distance(&a, &a, n);
        assert!(d.abs() < 1e-12, "entropy_distance(a,a) = {d}");
    }

    let a = BitSet::from_positions(4, [0, 1]);
    let b = BitSet::from_positions(4, [1, 2]);
    assert!((entropy_distance(&a, &b, 4) - 2.0).abs() < 1e-12);

    for _ in 0..10_000 {
        let n = rng.gen_range(1..=32);
        let a = BitSet::from_positions(n, (0..n).filter(|_| rng.gen_bool(0.5)));
        let b = BitSet::from_positions(n, (0..n).filter(|_| rng.gen_bool(0.5)));
        let j = jaccard(&a, &b);
        assert_eq!(j, jaccard(&b, &a), "jaccard must be symmetric");
        assert!(j >= Coefficient::zero() && j <= Coefficient::one());
    }

    let elapsed = started.elapsed();
    println!("PASS criterion 8: entropy-distance and Jaccard properties hold ({elapsed:?})");
}

#[test]
fn criterion_09_canonicalization_semantics() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c9);
    for _ in 0..1000 {
        let n_objects = rng.gen_range(3..=10);
        let n_desc = rng.gen_range(2..=6);
        let store = common::random_store(&mut rng, n_objects, n_desc, 2);
        let n_conjuncts = rng.gen_range(1..=4);
        let mut conjuncts = Vec::new();
        for _ in 0..n_conjuncts {
            let len = rng.gen_range(1..=3.min(n_desc));
            let mut indices: Vec<usize> = (0..n_desc).collect();
            for i in (1..indices.len()).rev() {
                indices.swap(i, rng.gen_range(0..=i));
            }
            let conj: Vec<Literal> = indices[..len]
                .iter()
                .map(|&index| Literal {
                    index,
                    negated: rng.gen_bool(0.5),
                })
                .collect();
            conjuncts.push(conj);
        }
        let expr = SetExpression::from_conjuncts(FamilyId::X, conjuncts);
        let canon = canonicalize(&expr).unwrap();
        assert_eq!(
            expr.evaluate(&store).unwrap(),
            canon.evaluate(&store).unwrap(),
            "canonicalization changed the evaluation"
        );
        let twice = canonicalize(&canon).unwrap();
        assert_eq!(canon, twice, "canonicalization must be idempotent");
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 9: 1000 random expressions survive canonicalization semantically ({elapsed:?})");
}

#[test]
fn criterion_10_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1.jsonl");
    let out2 = dir.path().join("run2.jsonl");
    for out in [&out1, &out2] {
        let code = run_cli([
            "redescribe",
            "mine",
            "--universe",
            common::fixture_path("fig1_universe.txt").to_str().unwrap(),
            "--x-family",
            common::fixture_path("fig1_x.tsv").to_str().unwrap(),
            "--y-family",
            common::fixture_path("fig1_y.tsv").to_str().unwrap(),
            "--theta",
            "1/1",
            "--depth-top",
            "2",
            "--depth-bottom",
            "2",
            "--seed",
            "3",
            "--explain",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    assert!(!bytes1.is_empty(), "expected some output");
    assert_eq!(bytes1, bytes2, "identical runs must be byte-identical");
    let elapsed = started.elapsed();
    println!("PASS criterion 10: two identical mine runs are byte-identical ({elapsed:?})");
}
