use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use streamac_bench::{random_tensor, test_signal, toy_model};
use streamac_core::emformer::{blocksparse_attention, dense_masked_attention, AttentionBlockMask};

/// Steady-state cost of one 80 ms chunk after the warm-up replay.
fn chunk_push(c: &mut Criterion) {
    let model = toy_model(42);
    let cs = model.config().session.chunk_samples();
    let warm = test_signal(1, cs * (model.config().session.warmup_chunks + 2));
    let chunk = test_signal(2, cs);

    let mut g = c.benchmark_group("streaming");
    g.throughput(Throughput::Elements(cs as u64));
    g.bench_function("push_chunk_steady_state", |b| {
        let mut session = model.stream_session();
        for w in warm.chunks(cs) {
            session.push_chunk(w).unwrap();
        }
        b.iter(|| session.push_chunk(&chunk).unwrap());
    });
    g.finish();
}

fn offline_convert(c: &mut Criterion) {
    let model = toy_model(42);
    let input = test_signal(3, 2 * 16000);

    let mut g = c.benchmark_group("offline");
    g.throughput(Throughput::Elements(input.len() as u64));
    g.sample_size(20);
    g.bench_function("convert_2s", |b| {
        b.iter(|| model.offline_convert(&input).unwrap())
    });
    g.finish();
}

/// The sliced-window attention against the dense-mask reference it matches.
fn attention(c: &mut Criterion) {
    let t = 200;
    let dim = 32;
    let heads = 4;
    let mask = AttentionBlockMask::new(t, 4, 30, 8).unwrap();
    let q = random_tensor(10, t, dim);
    let k = random_tensor(11, t, dim);
    let v = random_tensor(12, t, dim);

    let mut g = c.benchmark_group("attention_t200");
    g.bench_function("blocksparse", |b| {
        b.iter(|| blocksparse_attention(&q, &k, &v, &mask, heads).unwrap())
    });
    g.bench_function("dense_masked", |b| {
        b.iter(|| dense_masked_attention(&q, &k, &v, &mask, heads).unwrap())
    });
    g.finish();
}

/// Session construction plus the full warm-up replay, the start-of-stream
/// cost a caller pays once.
fn warmup(c: &mut Criterion) {
    let model = toy_model(42);
    let cs = model.config().session.chunk_samples();
    let n = cs * model.config().session.warmup_chunks;
    let warm = test_signal(4, n);

    let mut g = c.benchmark_group("streaming");
    g.sample_size(20);
    g.bench_function("warmup_replay", |b| {
        b.iter_batched(
            || model.stream_session(),
            |mut session| {
                for w in warm.chunks(cs) {
                    session.push_chunk(w).unwrap();
                }
                session
            },
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, chunk_push, offline_convert, attention, warmup);
criterion_main!(benches);
