//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::Array2;
use polyalign::ann::{build_pq, exact_topk, query_topk};
use polyalign::embedding::{trigrams, EmbeddingMatrix, EmbeddingProvider, ProviderConfig, RemoteConfig, RemoteService};
use polyalign::evaluation::{load_gold, run_ablation, score, AblationArm, GoldAlignment, GoldFormat};
use polyalign::matcher::{
    all_pairs, hungarian_assign, mutual_topk, threshold_filter, AlignmentSet, Correspondence, Relation, SimilarityMatrix,
};
use polyalign::ontology::{parse_ontology_str, Iri, RdfFormat};
use polyalign::pipeline::{run_pipeline, PipelineConfig};
use polyalign::reasoner::{compute_closure, InferredOntology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::datasets::{clustered, matrix, random_unit};
use support::oracles::brute_force;
use support::stub_service::{Behavior, StubService};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/bilingual")
}

fn fixture(name: &str) -> String {
    fs::read_to_string(fixture_dir().join(name)).unwrap()
}

fn ontology(text: &str) -> InferredOntology {
    compute_closure(&parse_ontology_str(text, RdfFormat::Turtle).unwrap().ontology)
}

fn random_matrix(rng: &mut ChaCha8Rng, p: usize, q: usize) -> Array2<f64> {
    Array2::from_shape_fn((p, q), |_| rng.random_range(-1.0..1.0))
}

fn total(m: &Array2<f64>, pairs: &BTreeSet<(usize, usize)>) -> f64 {
    pairs.iter().map(|&(i, j)| m[[i, j]]).sum()
}

fn unit_rows(m: &EmbeddingMatrix) -> Result<f64, String> {
    let worst = m
        .rows()
        .rows()
        .into_iter()
        .map(|r| (r.dot(&r).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("{}: row norm off by {worst:e}", m.provider_id()))?;
    Ok(worst)
}

fn metric_fixture() -> Result<String, String> {
    let iri = |side: &str, i: usize| Iri::new(format!("urn:{side}:{i}")).unwrap();
    let gold = GoldAlignment::new((0..50).map(|i| (iri("s", i), iri("t", i))));
    let predicted = AlignmentSet {
        cells: (0..39)
            .chain(100..121)
            .map(|i| Correspondence {
                source: iri("s", i),
                target: iri("t", i),
                confidence: 1.0,
                relation: Relation::Equivalence,
            })
            .collect(),
    };
    let m = score(&predicted, &gold).map_err(|e| e.to_string())?;
    ensure((m.f1 - 0.709).abs() <= 0.001, || format!("f1 {}", m.f1))?;
    Ok(format!("P={:.2} R={:.2} F1={:.4}", m.precision, m.recall, m.f1))
}

fn hungarian_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for trial in 0..500 {
        let (p, q) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let m = random_matrix(&mut rng, p, q);
        let sm = SimilarityMatrix::from_scores(m.clone());
        let all = all_pairs(&sm);
        let got = total(&m, &hungarian_assign(&sm, &all));
        let (_, best) = brute_force(&m, &all);
        ensure(got == best, || format!("trial {trial} ({p}x{q}): {got} vs {best}"))?;
    }
    Ok("500/500 totals equal".into())
}

fn row_shift_invariance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..100 {
        let p = rng.random_range(1..=6);
        let q = rng.random_range(p..=6);
        let m = random_matrix(&mut rng, p, q);
        let (row, shift) = (rng.random_range(0..p), rng.random_range(-1.0..1.0));
        let mut shifted = m.clone();
        shifted.row_mut(row).mapv_inplace(|x| x + shift);
        let (a, b) = (SimilarityMatrix::from_scores(m), SimilarityMatrix::from_scores(shifted));
        let (x, y) = (hungarian_assign(&a, &all_pairs(&a)), hungarian_assign(&b, &all_pairs(&b)));
        ensure(x == y, || format!("trial {trial}: {x:?} vs {y:?}"))?;
    }
    Ok("100/100 unchanged (p <= q)".into())
}

fn topk_and_threshold() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for trial in 0..200 {
        let (p, q) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let a = SimilarityMatrix::from_scores(random_matrix(&mut rng, p, q));
        let k = rng.random_range(1..=4);
        let forward = mutual_topk(&a, k);
        let backward: BTreeSet<_> = mutual_topk(&a.transposed(), k).into_iter().map(|(j, i)| (i, j)).collect();
        ensure(forward == backward, || format!("trial {trial}: top-{k} not symmetric"))?;
        let (t1, t2): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let assigned = hungarian_assign(&a, &forward);
        for set in [all_pairs(&a), assigned] {
            let (strict, loose) = (threshold_filter(&set, &a, hi), threshold_filter(&set, &a, lo));
            ensure(strict.is_subset(&loose), || format!("trial {trial}: threshold not monotone"))?;
        }
    }
    Ok("200/200".into())
}

fn normalization() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let words: Vec<(Iri, String)> = (0..40)
        .map(|i| {
            let len = rng.random_range(1..14);
            let text: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
            (Iri::new(format!("urn:w:{i:03}")).unwrap(), format!("{text} {i}"))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for dim in [8, 64, 256, 1000] {
        worst = worst.max(unit_rows(&ProviderConfig::HashTest { dimension: dim }.build().unwrap().embed(&words).map_err(|e| e.to_string())?)?);
    }

    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "dim=7").unwrap();
    for (iri, _) in &words {
        let row: Vec<String> = (0..7).map(|_| format!("{:e}", rng.random_range(-50.0..50.0))).collect();
        writeln!(file, "{iri} {}", row.join(" ")).unwrap();
    }
    let vectors = ProviderConfig::FileVectors {
        path: file.path().to_path_buf(),
    };
    worst = worst.max(unit_rows(&vectors.build().unwrap().embed(&words).map_err(|e| e.to_string())?)?);

    let stub = StubService::start(Behavior::Hash { dim: 48 });
    let remote = RemoteService::new(RemoteConfig {
        batch_size: 7,
        ..RemoteConfig::new(stub.url())
    });
    worst = worst.max(unit_rows(&remote.embed(&words).map_err(|e| e.to_string())?)?);
    Ok(format!("hash, file, remote: max |norm - 1| = {worst:.1e}"))
}

fn pq_exactness_and_recall() -> Result<String, String> {
    let data = matrix(random_unit(60, 16, 11));
    let index = build_pq(&data, 1, 60, 5).map_err(|e| e.to_string())?;
    for (n, q) in random_unit(100, 16, 12).iter().enumerate() {
        let approx: Vec<Iri> = query_topk(&index, q, 60).into_iter().map(|(k, _)| k).collect();
        let exact: Vec<Iri> = exact_topk(&data, q, 60).into_iter().map(|(k, _)| k).collect();
        ensure(approx == exact, || format!("query {n}: ranking differs with m=1, kc=n"))?;
    }

    let (points, queries) = clustered(50, 10, 64, 0.5, 50, 2024);
    let data = matrix(points);
    let index = build_pq(&data, 8, 16, 1).map_err(|e| e.to_string())?;
    let hits: usize = queries
        .iter()
        .map(|q| {
            let exact: BTreeSet<Iri> = exact_topk(&data, q, 10).into_iter().map(|(k, _)| k).collect();
            query_topk(&index, q, 10).into_iter().filter(|(k, _)| exact.contains(k)).count()
        })
        .sum();
    let recall = hits as f64 / (10 * queries.len()) as f64;
    ensure(recall >= 0.9, || format!("recall@10 {recall:.3}"))?;
    Ok(format!("exact on 100 queries; recall@10 = {recall:.3} (500 vectors, m=8, kc=16)"))
}

fn self_alignment() -> Result<String, String> {
    let en = fixture("en.ttl");
    let copy = en.replace("http://example.org/campus/en#", "http://example.org/copy#");
    let mut config = PipelineConfig {
        source_languages: vec!["en".into()],
        target_languages: vec!["en".into()],
        ..Default::default()
    };
    config.matcher.k = 1;
    config.matcher.theta = 0.99;
    let run = run_pipeline(&ontology(&en), &ontology(&copy), &config).map_err(|e| e.to_string())?;
    let identity = GoldAlignment::new(run.source_embeddings.row_keys().iter().map(|k| {
        let renamed = k.as_str().replace("campus/en#", "copy#");
        (k.clone(), Iri::new(renamed).unwrap())
    }));
    let m = score(&run.alignment, &identity).map_err(|e| e.to_string())?;
    ensure((m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0), || format!("{m:?}"))?;
    Ok(format!("P=R=F1=1 over {} entities", identity.len()))
}

fn bilingual_fixture() -> Result<String, String> {
    // The committed oracle table must agree with exact trigram counts and put gold at each row's maximum.
    let texts: HashMap<String, String> = fixture("texts.tsv")
        .lines()
        .filter_map(|l| l.split_once('\t').map(|(a, b)| (a.to_string(), b.to_string())))
        .collect();
    let counts = |t: &str| {
        trigrams(t).into_iter().fold(HashMap::<String, f64>::new(), |mut m, g| {
            *m.entry(g).or_default() += 1.0;
            m
        })
    };
    let mut best: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for line in fixture("cosine_oracle.tsv").lines() {
        let f: Vec<&str> = line.split('\t').collect();
        let (a, b) = (counts(&texts[f[0]]), counts(&texts[f[1]]));
        let dot: f64 = a.iter().filter_map(|(g, v)| b.get(g).map(|w| v * w)).sum();
        let norm = |m: &HashMap<String, f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
        let cos = dot / (norm(&a) * norm(&b));
        ensure((cos - f[2].parse::<f64>().unwrap()).abs() < 1e-8, || format!("oracle row {line}: {cos}"))?;
        let slot = best.entry(f[0].to_string()).or_insert((f64::MIN, String::new()));
        if cos > slot.0 {
            *slot = (cos, f[1].to_string());
        }
    }
    let gold = load_gold(BufReader::new(fixture("gold.tsv").as_bytes()), GoldFormat::Tsv)
        .map_err(|e| e.to_string())?
        .gold;
    let argmax: BTreeSet<(String, String)> = best.into_iter().map(|(s, (_, t))| (s, t)).collect();
    let expected: BTreeSet<(String, String)> = gold.pairs().iter().map(|(s, t)| (s.to_string(), t.to_string())).collect();
    ensure(argmax == expected, || "oracle argmax differs from gold".into())?;

    let config = PipelineConfig {
        source_languages: vec!["en".into()],
        target_languages: vec!["de".into()],
        ..Default::default()
    };
    let arms = [AblationArm::Full, AblationArm::NoVerbalization];
    let rows = run_ablation(&ontology(&fixture("en.ttl")), &ontology(&fixture("de.ttl")), &config, &arms, &gold)
        .map_err(|e| e.to_string())?;
    let (full, bare) = (rows[0].metrics.f1, rows[1].metrics.f1);
    ensure(full == 1.0, || format!("full F1 {full}"))?;
    ensure(bare <= full, || format!("no_verbalization F1 {bare} > full {full}"))?;
    Ok(format!("full F1={full:.4}, no_verbalization F1={bare:.4}"))
}

fn cli_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_polyalign"))
            .args(["--src-lang", "en", "--tgt-lang", "de", "--source"])
            .arg(fixture_dir().join("en.ttl"))
            .arg("--target")
            .arg(fixture_dir().join("de.ttl"))
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "error")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("exit {status}"))?;
        fs::read(&out).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a.rdf")?, run("b.rdf")?);
    ensure(a == b, || "alignment files differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Option<Duration>); 9] = [
        ("metric fixture", metric_fixture, Some(Duration::from_secs(1))),
        ("hungarian oracle", hungarian_oracle, Some(Duration::from_secs(10))),
        ("row-shift invariance", row_shift_invariance, None),
        ("mutual top-k symmetry and threshold monotonicity", topk_and_threshold, None),
        ("unit-norm rows from every provider", normalization, None),
        ("pq exactness and recall@10", pq_exactness_and_recall, Some(Duration::from_secs(30))),
        ("end-to-end self-alignment", self_alignment, None),
        ("end-to-end bilingual fixture", bilingual_fixture, Some(Duration::from_secs(5))),
        ("cli determinism", cli_determinism, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        let limit = budget.map(|b| format!(", limit {b:?}")).unwrap_or_default();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}{limit}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{elapsed:.2?}{limit}]");
            }
        }
    }
    println!("{} of {} acceptance checks passed", 9 - failed, 9);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
