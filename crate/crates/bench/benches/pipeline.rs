use btw_bench::fixtures::{scenarios, ROAD_CLOSURES};
use btw_core::dsl::{load, parse};
use btw_core::sim::{init_instance, Scenario};
use btw_core::validate::validate;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn pipeline(c: &mut Criterion) {
    c.bench_function("parse road closures", |b| b.iter(|| parse(black_box(ROAD_CLOSURES)).unwrap()));

    let (reg, model) = load(ROAD_CLOSURES).unwrap();
    c.bench_function("validate road closures", |b| b.iter(|| validate(black_box(&model), &reg)));

    for (name, sc) in [("happy", scenarios::HAPPY), ("rollback", scenarios::ROLLBACK)] {
        let scenario = Scenario::from_jsonl(sc, &model).unwrap();
        c.bench_function(&format!("simulate {name}"), |b| {
            b.iter(|| {
                let mut e = init_instance(&model, &reg, scenario.clone(), 0).unwrap();
                e.run(10_000).unwrap()
            })
        });
    }
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
