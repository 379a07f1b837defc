//! Temporary timing/effect probe; not part of the shipped suite.

use std::time::Instant;

use coco_milp::graphenc::encode;
use coco_milp::instance::generate_set_cover;
use coco_milp::pipeline::collect_pool;
use coco_milp::rng::derive_subseed;
use coco_milp::solver::{branch_and_bound, BnbConfig};

#[test]
#[ignore]
fn probe_label_cost_sc40x80() {
    for (density, cost_hi) in [(0.1, 1i64), (0.15, 1), (0.2, 1), (0.15, 5), (0.2, 5), (0.15, 10)] {
        let cfg = BnbConfig {
            pool_size: 10,
            node_limit: 200_000,
            ..BnbConfig::default()
        };
        let mut total_nodes = 0u64;
        let start = Instant::now();
        for i in 0..5 {
            let seed = derive_subseed(42, &format!("gen-sc-{i}"));
            let inst = generate_set_cover(40, 80, density, 1, cost_hi, seed).unwrap();
            let t = Instant::now();
            let pool = collect_pool(&inst, &cfg).unwrap();
            let res = branch_and_bound(&inst, &BnbConfig { pool_size: 1, ..cfg.clone() }).unwrap();
            total_nodes += res.nodes_explored;
            println!(
                "d={density} ch={cost_hi} inst {i}: pool {} in {:?}; exact {:?} nodes {} obj {}",
                pool.len(),
                t.elapsed(),
                res.status,
                res.nodes_explored,
                res.incumbent.as_ref().unwrap().objective
            );
        }
        println!("d={density}: total {:?}, nodes {}", start.elapsed(), total_nodes);
    }
}

#[test]
#[ignore]
fn probe_plain_budget_gap() {
    use coco_milp::solver::{search_with_marginals, SearchConfig};
    // How good is the plain solver at small node budgets, and how much do
    // oracle marginals help through the trust region?
    let density = 0.15;
    let cost_hi = 1;
    for (k0, delta) in [(60usize, 2usize), (64, 3), (56, 4)] {
        for budget in [50u64, 100, 200, 400] {
            let mut plain_gaps = Vec::new();
            let mut oracle_gaps = Vec::new();
            let mut lp_gaps = Vec::new();
            for i in 0..8 {
                let seed = derive_subseed(42, &format!("gen-sc-{i}"));
                let inst = generate_set_cover(40, 80, density, 1, cost_hi, seed).unwrap();
                let exact = branch_and_bound(&inst, &BnbConfig { pool_size: 1, node_limit: 200_000, ..BnbConfig::default() })
                    .unwrap();
                let best = exact.incumbent.clone().unwrap();
                let bks = best.objective;
                let budget_cfg = BnbConfig { pool_size: 1, node_limit: budget, ..BnbConfig::default() };
                let limited = branch_and_bound(&inst, &budget_cfg).unwrap();
                plain_gaps.push(limited.incumbent.as_ref().map_or(f64::INFINITY, |inc| (inc.objective - bks).abs()));

                let sc = SearchConfig { k0, k1: 0, delta };
                // Noisy oracle marginals.
                let marginals: Vec<f64> = best.values.iter().map(|&v| 0.3 + 0.4 * v).collect();
                let ps = search_with_marginals(&inst, &marginals, &sc, &budget_cfg).unwrap();
                oracle_gaps.push(ps.incumbent.as_ref().map_or(f64::INFINITY, |inc| (inc.objective - bks).abs()));

                // LP-relaxation marginals: a weak but honest heuristic signal.
                let lp = coco_milp::solver::solve_lp(&inst).unwrap();
                let ps_lp = search_with_marginals(&inst, &lp.x, &sc, &budget_cfg).unwrap();
                lp_gaps.push(ps_lp.incumbent.as_ref().map_or(f64::INFINITY, |inc| (inc.objective - bks).abs()));
            }
            println!("k0={k0} delta={delta} budget {budget}: plain {plain_gaps:?}");
            println!("k0={k0} delta={delta} budget {budget}: oracle {oracle_gaps:?}");
            println!("k0={k0} delta={delta} budget {budget}: lp     {lp_gaps:?}");
        }
    }
}

#[test]
#[ignore]
fn probe_forward_backward_speed() {
    use coco_milp::nn::{init_model, GnnConfig};
    let inst = generate_set_cover(40, 80, 0.1, 1, 100, 7).unwrap();
    let g = encode(&inst);
    for d in [16usize, 32, 64] {
        let cfg = GnnConfig {
            embed_size: d,
            num_rounds: 2,
            mlp_hidden: d,
            icc_enabled: true,
            seed: 1,
        };
        let model = init_model(&cfg).unwrap();
        let start = Instant::now();
        let iters = 20;
        for _ in 0..iters {
            let (pred, trace) = model.forward_traced(&g).unwrap();
            let upstream: Vec<f64> = pred.marginals.iter().map(|m| m - 0.5).collect();
            let _ = model.backward(&g, &trace, &upstream).unwrap();
        }
        println!("d={d}: {:?} per fwd+bwd", start.elapsed() / iters);
    }
}
