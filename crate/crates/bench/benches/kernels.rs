use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use trqv_core::mme::ModelExpectation;
use trqv_core::rng::stream_rng;
use trqv_core::{
    estimate_cgmy, mc_eb, sample_stable, simulate_cgmy_increments, trqv, ExpectationEngine,
    LevyModelParams, MomentSet, MomentSpec, PipelineConfig, SamplingGrid, StableLaw, ThetaEstimate,
};

const H: f64 = 1.0 / 19656.0;

fn year() -> SamplingGrid {
    SamplingGrid::new(19656, 1.0).unwrap()
}

fn kernels(c: &mut Criterion) {
    let p = LevyModelParams::reference(0.2, 1.35).unwrap();
    let series = simulate_cgmy_increments(&p, &year(), 1).unwrap();

    c.bench_function("trqv_year_5min", |b| b.iter(|| trqv(black_box(&series), 0.004).unwrap()));

    let law = StableLaw::strictly_stable(0.028, 0.028, 1.35, H).unwrap();
    c.bench_function("stable_draws_1000", |b| {
        b.iter_batched(
            || stream_rng(1, 0),
            |mut rng| (0..1000).map(|_| sample_stable(&law, &mut rng).unwrap()).sum::<f64>(),
            BatchSize::SmallInput,
        )
    });

    let theta = ThetaEstimate::at(0.04, 0.028, 1.35);
    let spec = MomentSpec::new(MomentSet::FSet, 200.0).unwrap();
    for engine in [ExpectationEngine::Fourier, ExpectationEngine::Dft] {
        // a fresh evaluator per call so the DFT route rebuilds its density
        c.bench_function(&format!("model_expectation_{engine:?}"), |b| {
            b.iter(|| ModelExpectation::new(engine).eval(black_box(&spec), &theta, H).unwrap())
        });
    }

    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("simulate_year_5min", |b| b.iter(|| simulate_cgmy_increments(&p, &year(), 2).unwrap()));
    group.bench_function("tilted_eb_100k", |b| b.iter(|| mc_eb(&p, H, 0.004, 100_000, 3).unwrap()));
    group.bench_function("pipeline_year_5min", |b| {
        b.iter(|| estimate_cgmy(black_box(&series), &PipelineConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
