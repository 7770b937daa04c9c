//! Kernel timings and sequential vs rayon comparisons for the data-parallel
//! stages. The `par` variants are compiled only with the `parallel` feature.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lpcnet::dsp::{analyze_frame, AudioBuffer, MuLawLevel, FRAME_SIZE, NB_FEATURES};
use lpcnet::exec;
use lpcnet::model::{window_at, ConditioningContribution, SampleRateState};
use lpcnet::nn::{BlockSparseMatrix, GruScratch};
use lpcnet::synth;
use lpcnet::{Model, ModelConfig, SamplerConfig};

fn kernels(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("kernels");

    let sparse = BlockSparseMatrix::random(384, 384, 0.1, 0.2, &mut rng).unwrap();
    let dense = sparse.densify();
    let x: Vec<f32> = (0..384).map(|i| (i as f32 * 0.37).sin()).collect();
    let mut y = vec![0.0; 384];
    group.throughput(Throughput::Elements(sparse.nonzeros() as u64));
    group.bench_function("sparse_gemv_384_d0.1", |b| {
        b.iter(|| sparse.gemv_into(black_box(&x), &mut y).unwrap())
    });
    group.bench_function("dense_gemv_384", |b| b.iter(|| dense.gemv_into(black_box(&x), &mut y).unwrap()));

    let model = Model::random(ModelConfig::default(), 0).unwrap();
    let gru = &model.sample.gru_a;
    let mut h = vec![0.0; 384];
    let mut scratch = GruScratch::new(384);
    let inputs: [Vec<f32>; 3] = std::array::from_fn(|g| vec![0.01 * g as f32; 384]);
    group.throughput(Throughput::Elements(1));
    group.bench_function("gru_a_step", |b| {
        b.iter(|| {
            gru.step_in_place(&mut h, [&inputs[0], &inputs[1], &inputs[2]], &mut scratch)
                .unwrap()
        })
    });

    let fc = &model.sample.dual_fc;
    let hb: Vec<f32> = (0..16).map(|i| (i as f32 * 0.3).cos()).collect();
    let mut out = vec![0.0; fc.outputs()];
    let mut tmp = vec![0.0; fc.outputs()];
    group.bench_function("dual_fc", |b| b.iter(|| fc.forward_into(black_box(&hb), &mut out, &mut tmp).unwrap()));

    let mut state = SampleRateState::new(&model.sample);
    let mut cond = ConditioningContribution::zeros(384);
    model.sample.frame_setup_into(&[0.1; 128], &mut cond).unwrap();
    group.bench_function("sample_rate_step", |b| {
        b.iter(|| {
            model
                .sample
                .logits(&mut state, MuLawLevel::ZERO, MuLawLevel::new(130), MuLawLevel::new(126), &cond)
                .map(|l| l[0])
                .unwrap()
        })
    });

    group.finish();
}

fn test_audio(seconds: usize) -> AudioBuffer {
    let n = seconds * 16000;
    AudioBuffer::new(
        (0..n)
            .map(|i| {
                let t = i as f32 / 16000.0;
                0.3 * (2.0 * std::f32::consts::PI * 140.0 * t).sin() + 0.05 * (i as f32 * 1.7).sin()
            })
            .collect(),
    )
    .unwrap()
}

fn feature_extraction(c: &mut Criterion) {
    let audio = test_audio(4);
    let frames = audio.len() / FRAME_SIZE;
    let mut group = c.benchmark_group("feature_extraction");
    group.throughput(Throughput::Elements(frames as u64));
    group.bench_function("seq", |b| {
        b.iter(|| exec::seq::map_indexed(frames, |i| analyze_frame(&audio, i).unwrap()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| exec::par::map_indexed(frames, |i| analyze_frame(&audio, i).unwrap()))
    });
    group.finish();
}

fn frame_rate_network(c: &mut Criterion) {
    let model = Model::random(ModelConfig::default(), 0).unwrap();
    let inputs: Vec<[f32; NB_FEATURES]> = synth::synthetic_features(400, 2).iter().map(|f| f.to_input()).collect();
    let mut group = c.benchmark_group("frame_rate_network");
    group.throughput(Throughput::Elements(inputs.len() as u64));
    group.bench_function("seq", |b| {
        b.iter(|| exec::seq::map_indexed(inputs.len(), |t| model.frame.forward(&window_at(&inputs, t)).unwrap()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| exec::par::map_indexed(inputs.len(), |t| model.frame.forward(&window_at(&inputs, t)).unwrap()))
    });
    group.bench_function("forward_sequence", |b| b.iter(|| model.frame.forward_sequence(&inputs).unwrap()));
    group.finish();
}

fn multi_stream_synthesis(c: &mut Criterion) {
    let model = Model::random(ModelConfig::default(), 0).unwrap();
    let mut group = c.benchmark_group("multi_stream_synthesis");
    group.sample_size(10);
    for streams in [1usize, 4] {
        let jobs: Vec<_> = (0..streams)
            .map(|i| {
                (
                    synth::synthetic_features(20, i as u64),
                    SamplerConfig {
                        seed: i as u64,
                        ..SamplerConfig::default()
                    },
                )
            })
            .collect();
        let run = |(frames, config): &(Vec<_>, SamplerConfig)| synth::synthesize(&model, frames, *config).unwrap();
        group.throughput(Throughput::Elements((streams * 20 * FRAME_SIZE) as u64));
        group.bench_with_input(BenchmarkId::new("seq", streams), &jobs, |b, jobs| {
            b.iter(|| exec::seq::map_indexed(jobs.len(), |i| run(&jobs[i])))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", streams), &jobs, |b, jobs| {
            b.iter(|| exec::par::map_indexed(jobs.len(), |i| run(&jobs[i])))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, feature_extraction, frame_rate_network, multi_stream_synthesis);
criterion_main!(benches);
