mod common;

use common::*;
use lacam_lg::pibt::{build_preference, Pibt, PriorityState};
use lacam_lg::{
    compute_metrics, solve, validate, Configuration, Deadline, GuidanceMode, Solution,
    SolverOptions, Violation, NO_VERTEX,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn astar_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(astar_oracle_case(&mut rng), Ok(()));
    }

    #[test]
    fn shift_keeps_followed_paths(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(shift_case(&mut rng), Ok(()));
    }

    #[test]
    fn preference_is_a_sorted_permutation(seed in any::<u64>(), swap_mode in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 6, 6, 0.25);
        let nv = grid.num_vertices();
        let here = rng.random_range(0..nv) as u32;
        let goal = rng.random_range(0..nv) as u32;
        let dist = lacam_lg::dist::bfs_from(&grid, [goal]);
        let mut cands = moves(&grid, here);
        let hint = match rng.random_range(0..3) {
            0 => None,
            1 => Some(cands[rng.random_range(0..cands.len())]),
            _ => Some(rng.random_range(0..nv) as u32),
        };
        let mut out = Vec::new();
        build_preference(&grid, here, &dist, hint, swap_mode, &mut rng, &mut out);

        let mut sorted = out.clone();
        sorted.sort_unstable();
        cands.sort_unstable();
        prop_assert_eq!(sorted, cands);
        let key = |v: u32| {
            if swap_mode {
                (0, -(dist[v as usize] as i64))
            } else {
                (u8::from(hint != Some(v)), dist[v as usize] as i64)
            }
        };
        prop_assert!(out.windows(2).all(|p| key(p[0]) <= key(p[1])));
        if let (false, Some(h)) = (swap_mode, hint) {
            if out.contains(&h) {
                prop_assert_eq!(out[0], h);
            }
        }
    }

    #[test]
    fn pibt_step_is_a_valid_joint_move(seed in any::<u64>(), swap in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 3, 3, 0.2);
        let n = rng.random_range(1..=grid.num_vertices().min(4));
        let inst = random_instance(&mut rng, grid.clone(), n);
        let valid = valid_successors(&grid, inst.starts().as_slice());
        let pri = PriorityState::initial(&inst, inst.starts());
        let hints: Vec<u32> = (0..n)
            .map(|i| {
                let m = moves(&grid, inst.starts()[i]);
                if rng.random_bool(0.5) { m[rng.random_range(0..m.len())] } else { NO_VERTEX }
            })
            .collect();
        let mut pibt = Pibt::new(&inst, swap);
        let next = pibt.step(&inst, inst.starts(), &pri.order(), &[], &hints, &mut rng);
        // without constraints PIBT always finds a successor
        let next = next.expect("unconstrained step");
        prop_assert!(valid.contains(&next.into_inner()));

        // constrain a prefix of agents to a valid joint move
        let target = &valid[rng.random_range(0..valid.len())];
        let k = rng.random_range(1..=n);
        let constraints: Vec<(u32, u32)> = (0..k).map(|i| (i as u32, target[i])).collect();
        if let Some(next) = pibt.step(&inst, inst.starts(), &pri.order(), &constraints, &hints, &mut rng) {
            let next = next.into_inner();
            prop_assert!(valid.contains(&next));
            for &(i, v) in &constraints {
                prop_assert_eq!(next[i as usize], v);
            }
        }
    }

    #[test]
    fn solutions_are_valid_and_deterministic(seed in any::<u64>(), mode_idx in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 8, 8, 0.2);
        let n = rng.random_range(1..=12);
        let inst = random_instance(&mut rng, grid, n);
        let opts = SolverOptions { seed, ..SolverOptions::with_mode(GuidanceMode::ALL[mode_idx]) };
        let a = solve(&inst, opts.clone(), Deadline::none()).unwrap();
        prop_assert_eq!(validate(&inst, &a), Ok(()));
        prop_assert!(a.flowtime() >= inst.lower_bound());
        let b = solve(&inst, opts, Deadline::none()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn injected_collisions_are_caught(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 6, 6, 0.15);
        let n = rng.random_range(2..=6);
        let inst = random_instance(&mut rng, grid.clone(), n);
        let sol = solve(&inst, SolverOptions::default(), Deadline::none()).unwrap();
        let mut configs: Vec<Vec<u32>> = sol.configs().iter().map(|c| c.as_slice().to_vec()).collect();
        prop_assume!(configs.len() >= 3);
        let t = rng.random_range(1..configs.len() - 1);
        let (a, b) = (0, 1 + rng.random_range(0..n - 1));
        if rng.random_bool(0.5) {
            // vertex collision at t
            configs[t][a] = configs[t][b];
            let mutated = Solution::new(configs.into_iter().map(Configuration::new).collect());
            let caught = matches!(validate(&inst, &mutated), Err(Violation::VertexCollision { t: tt, .. } | Violation::InvalidMove { t: tt, .. }) if tt <= t);
            prop_assert!(caught);
        } else {
            // swap agents a and b from t on; catches as a swap, a jump, or
            // an endpoint mismatch
            for c in configs.iter_mut().skip(t) {
                c.swap(a, b);
            }
            let mutated = Solution::new(configs.into_iter().map(Configuration::new).collect());
            let same_goal = inst.goals()[a] == inst.goals()[b];
            prop_assert!(same_goal || validate(&inst, &mutated).is_err());
        }
    }

    #[test]
    fn heatmap_total_matches_travel_times(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 8, 8, 0.2);
        let n = rng.random_range(1..=10);
        let inst = random_instance(&mut rng, grid, n);
        let sol = solve(&inst, SolverOptions::default(), Deadline::none()).unwrap();
        let m = compute_metrics(&inst, &sol, std::time::Duration::ZERO);
        // independent travel time: index after the last step off the goal
        let travel: Vec<u64> = sol
            .paths()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.iter().rposition(|&v| v != inst.goals()[i]).map_or(0, |k| k as u64 + 1)
            })
            .collect();
        prop_assert_eq!(m.flowtime, travel.iter().sum::<u64>());
        let total: u64 = m.visits.iter().map(|&c| c as u64).sum();
        prop_assert_eq!(total, travel.iter().map(|t| t + 1).sum::<u64>());
        prop_assert!(m.ratio >= 1.0);
    }
}
