use std::path::{Path, PathBuf};

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infocons::ensemble::{enumerate_exact, metropolis_chains, EnsembleSystem, SamplerConfig};
use infocons::lexicon::{scan_source, LanguageSpec};
use infocons::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn c_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            c_files(&p, out);
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("c" | "h")) {
            out.push(p);
        }
    }
}

fn scan_corpus(c: &mut Criterion) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus/lua-5.4");
    let mut paths = Vec::new();
    c_files(&root, &mut paths);
    let files: Vec<(PathBuf, Vec<u8>)> = paths
        .into_iter()
        .map(|p| (p.clone(), std::fs::read(p).unwrap()))
        .collect();
    let spec = LanguageSpec::bundled("c").unwrap();
    let mut g = c.benchmark_group("scan_corpus");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| exec.map(&files, |(p, src)| scan_source(src, &spec, p.as_path()).spans.len()))
        });
    }
    g.finish();
}

fn sampler_chains(c: &mut Criterion) {
    let system = EnsembleSystem::from_alphabet_sizes(10_000, &(2..=60).collect::<Vec<u64>>(), 1.5).unwrap();
    let config = SamplerConfig {
        histograms: false,
        ..SamplerConfig::new(200_000, 1)
    };
    let mut g = c.benchmark_group("sampler_chains");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 8), &8, |b, &chains| {
            b.iter(|| metropolis_chains(&system, &config, chains, exec).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let system = EnsembleSystem::from_alphabet_sizes(120, &[2, 4, 8, 16], 1.0).unwrap();
    let mut g = c.benchmark_group("enumerate_exact");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| enumerate_exact(&system, 1_000_000, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, scan_corpus, sampler_chains, enumeration);
criterion_main!(benches);
