use std::hint::black_box;

use clear_bench::{fractal_tile, query_pairs};
use clear_core::bsd::{select_seeds, voronoi_partition, SeedParams};
use clear_core::decompose::{clear_decompose, decompose_to_budget, DecomposeParams, Method};
use clear_core::graph::{CostWeights, RegionGraph};
use clear_core::planefit::FitParams;
use clear_core::planner::{plan_grid_with, plan_region, PixelTerrain, PlanQuery};
use clear_core::raster::local_std;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn seeds_and_voronoi(c: &mut Criterion) {
    let mut g = c.benchmark_group("bsd");
    for side in [100, 200] {
        let tile = fractal_tile(side, 1);
        let params = SeedParams { n: side * side / 50, ..SeedParams::default() };
        let sigma = local_std(&tile, params.k).unwrap();
        g.bench_with_input(BenchmarkId::new("select_seeds", side), &side, |b, _| {
            b.iter(|| select_seeds(black_box(&tile), &sigma, &params).unwrap())
        });
        let seeds = select_seeds(&tile, &sigma, &params).unwrap().seeds;
        g.bench_with_input(BenchmarkId::new("voronoi", side), &side, |b, _| {
            b.iter(|| voronoi_partition(black_box(&seeds), &tile).unwrap())
        });
    }
    g.finish();
}

fn decompositions(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    g.sample_size(20);
    let tile = fractal_tile(200, 2);
    let seeds = SeedParams { n: 800, ..SeedParams::default() };
    g.bench_function("clear_200", |b| b.iter(|| clear_decompose(black_box(&tile), &seeds, &FitParams::default(), 0.35).unwrap()));
    let params = DecomposeParams::default();
    for method in [Method::Grid, Method::Hex, Method::Quadtree] {
        g.bench_function(format!("{method}_200_budget_800"), |b| {
            b.iter(|| decompose_to_budget(black_box(&tile), method, 800, &params).unwrap())
        });
    }
    let d = clear_decompose(&tile, &seeds, &FitParams::default(), 0.35).unwrap();
    g.bench_function("graph_build_200", |b| {
        b.iter(|| RegionGraph::build(black_box(d.regions.clone()), tile.classes(), &CostWeights::default(), 30.0))
    });
    g.finish();
}

fn planning(c: &mut Criterion) {
    let mut g = c.benchmark_group("plan");
    g.sample_size(20);
    let tile = fractal_tile(300, 3);
    let w = CostWeights::default();
    let seeds = SeedParams { n: tile.len() / 50, alpha_bdy: 0.0, ..SeedParams::default() };
    let d = clear_decompose(&tile, &seeds, &FitParams::default(), w.s_max).unwrap();
    let graph = RegionGraph::build(d.regions, tile.classes(), &w, tile.cell_size());
    let pix = PixelTerrain::new(&tile, w.s_max);
    let pairs = query_pairs(&tile, 10);
    g.bench_function("region_astar_300", |b| {
        b.iter(|| {
            for &(s, e) in &pairs {
                let _ = black_box(plan_region(&graph, &PlanQuery::new(s, e)));
            }
        })
    });
    g.bench_function("grid_astar_300", |b| {
        b.iter(|| {
            for &(s, e) in &pairs {
                let _ = black_box(plan_grid_with(&tile, &pix, &PlanQuery::new(s, e), &w));
            }
        })
    });
    g.finish();
}

criterion_group!(benches, seeds_and_voronoi, decompositions, planning);
criterion_main!(benches);
