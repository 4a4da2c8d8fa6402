//! Pose solver checked against hand-evaluated objectives, analytic inverse
//! kinematics and finite differences.

mod common;

use common::{chair_sit, planar_frozen, random_rig, strip_arm, tip_contact};
use contactkit::pose::{solve, staged_solve, ContactPair, PoseProblem, SolveConfig, SolveStatus};
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arm_problem(links: usize, len: f64, target: [f64; 3]) -> PoseProblem {
    let (s, b, m, tip) = strip_arm(links, len);
    PoseProblem::new(s, b, &m, &tip_contact(tip, target)).unwrap()
}

#[test]
fn default_weights() {
    let c = SolveConfig::default();
    assert_eq!((c.lambda_d, c.lambda_n, c.lambda_p), (1.0, 1.0, 10.0));
    assert_eq!(c.max_iterations, 500);
    assert_eq!(c.tolerance, 1e-8);
}

#[test]
fn objective_by_hand() {
    let (s, b, m, _) = strip_arm(2, 1.0);
    // Empty scene at rest.
    let p = PoseProblem::new(s.clone(), b.clone(), &m, &[]).unwrap();
    let rest = p.rest_pose().to_vec();
    assert_eq!(p.evaluate(&rest, &SolveConfig::default(), None).unwrap(), 0.0);

    // One contact at distance d with opposed normals: λ_d·d².
    let tip = m.closest_point(&Point3::new(2.0, 0.0, 0.0));
    let d = 0.37;
    let p = PoseProblem::new(s, b, &m, &tip_contact(tip, [2.0, d, 0.0])).unwrap();
    let config = SolveConfig {
        lambda_d: 2.5,
        ..SolveConfig::default()
    };
    let f = p.evaluate(&rest, &config, None).unwrap();
    assert!((f - 2.5 * d * d).abs() < 1e-12, "{f}");

    // Moving only the root leaves the pose prior unchanged.
    let mut theta = rest.clone();
    for (j, x) in theta.iter_mut().take(6).enumerate() {
        *x = 0.1 * (j as f64 + 1.0);
    }
    let prior = |t: &[f64]| p.evaluate_parts(t, &config, None).unwrap().prior;
    assert_eq!(prior(&theta), prior(&rest));
    theta[7] = 0.2;
    assert!((prior(&theta) - 10.0 * 0.04).abs() < 1e-12);
}

#[test]
fn zero_contacts_return_to_rest() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (s, b, m, _) = strip_arm(3, 0.5);
    let p = PoseProblem::new(s, b, &m, &[]).unwrap();
    let start: Vec<f64> = p.rest_pose().iter().map(|r| r + rng.gen_range(-1.0..1.0)).collect();
    let r = solve(&p, &SolveConfig::default(), &start).unwrap();
    for (j, (t, rest)) in r.theta.iter().zip(p.rest_pose()).enumerate().skip(6) {
        assert!((t - rest).abs() < 1e-8, "dof {j}: {t} vs {rest}");
    }
}

#[test]
fn two_link_reach_matches_analytic_ik() {
    let phi: f64 = 0.3;
    let reach = 1.5;
    let p = arm_problem(2, 1.0, [reach * phi.cos(), reach * phi.sin(), 0.0]);
    let config = SolveConfig {
        lambda_p: 0.0,
        frozen: planar_frozen(p.skeleton()),
        ..SolveConfig::default()
    };
    let r = solve(&p, &config, p.rest_pose()).unwrap();
    let residual = p.contact_distances(&r.theta).unwrap()[0];
    assert!(residual < 1e-3, "residual {residual}");
    // Law of cosines for the elbow.
    let elbow = ((reach * reach - 2.0) / 2.0).acos();
    assert!((r.theta[8].abs() - elbow).abs() < 1e-2, "{} vs {elbow}", r.theta[8]);
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let (p, theta) = random_rig(&mut rng);
        let config = SolveConfig {
            lambda_d: rng.gen_range(0.5..2.0),
            lambda_n: rng.gen_range(0.5..2.0),
            lambda_p: rng.gen_range(0.5..20.0),
            ..SolveConfig::default()
        };
        let mut g = vec![0.0; p.dof_count()];
        p.evaluate(&theta, &config, Some(&mut g)).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..theta.len())
            .map(|j| {
                let (mut a, mut b) = (theta.clone(), theta.clone());
                a[j] += h;
                b[j] -= h;
                (p.evaluate(&a, &config, None).unwrap() - p.evaluate(&b, &config, None).unwrap()) / (2.0 * h)
            })
            .collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err <= 1e-4 * norm.max(1e-8), "relative gradient error {}", err / norm);
    }
}

#[test]
fn trace_is_monotone_and_iterates_stay_in_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (mut p, theta) = random_rig(&mut rng);
        // Tight bounds on one joint so that some become active.
        let o = p.skeleton().dof_offset(1);
        for j in o..o + 3 {
            let r = p.rest_pose()[j];
            p.set_bounds(j, r - 0.05, r + 0.05).unwrap();
        }
        let config = SolveConfig {
            trace: true,
            ..SolveConfig::default()
        };
        let mut iterates = Vec::new();
        let r = contactkit::pose::solve_observed(&p, &config, &theta, |pr| {
            iterates.push(pr.theta.to_vec());
            true
        })
        .unwrap();
        assert!(r.trace.len() >= 2);
        assert_eq!(r.trace[0].0, 0);
        for w in r.trace.windows(2) {
            assert!(w[1].1 <= w[0].1, "objective increased: {w:?}");
            assert_eq!(w[1].0, w[0].0 + 1);
        }
        for it in &iterates {
            for j in 0..it.len() {
                assert!(p.lower()[j] <= it[j] && it[j] <= p.upper()[j]);
            }
        }
        assert!(r.trace_csv().starts_with("iteration,objective\n0,"));
    }
}

#[test]
fn removing_the_distance_term_leaves_the_contact_alone() {
    let p = arm_problem(2, 1.0, [1.2, 0.6, 0.0]);
    let config = SolveConfig {
        lambda_d: 0.0,
        frozen: planar_frozen(p.skeleton()),
        ..SolveConfig::default()
    };
    let before = p.contact_distances(p.rest_pose()).unwrap()[0];
    let r = solve(&p, &config, p.rest_pose()).unwrap();
    let after = p.contact_distances(&r.theta).unwrap()[0];
    assert!((after - before).abs() <= 0.01 * before, "{before} -> {after}");
}

#[test]
fn removing_the_prior_deviates_further_from_rest() {
    let p = arm_problem(3, 0.7, [1.1, 0.9, 0.0]);
    let frozen = planar_frozen(p.skeleton());
    let deviation = |lambda_p: f64| {
        let config = SolveConfig {
            lambda_p,
            frozen: frozen.clone(),
            ..SolveConfig::default()
        };
        let r = solve(&p, &config, p.rest_pose()).unwrap();
        p.skeleton().non_root_dofs().map(|j| (r.theta[j] - p.rest_pose()[j]).powi(2)).sum::<f64>()
    };
    let (free, held) = (deviation(0.0), deviation(10.0));
    assert!(free > held, "{free} vs {held}");
}

#[test]
fn frozen_dofs_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (p, theta) = random_rig(&mut rng);
    let frozen = vec![0, 2, 4, 7, 9, 11];
    let config = SolveConfig::default().freezing(frozen.clone());
    let r = solve(&p, &config, &theta).unwrap();
    for &j in &frozen {
        assert_eq!(r.theta[j].to_bits(), theta[j].to_bits());
    }
    assert!(r.theta != theta);
}

#[test]
fn staged_chair_sit() {
    let (p, skeleton) = chair_sit();
    let rest = p.rest_pose().to_vec();
    let stages = [
        SolveConfig::default().freezing(skeleton.non_root_dofs()),
        SolveConfig::default(),
    ];
    let r = staged_solve(&p, &stages, &rest).unwrap();
    let (s1, s2) = (&r.stages[0], &r.stages[1]);
    for j in skeleton.non_root_dofs() {
        assert_eq!(s1.theta[j].to_bits(), rest[j].to_bits());
    }
    assert!(s1.theta[..6] != rest[..6]);
    let initial = p.evaluate(&rest, &stages[0], None).unwrap();
    assert!(s1.objective < initial);
    assert!(s2.objective <= s1.objective);
    assert_eq!(r.theta, s2.theta);

    // One stage with nothing frozen is a plain solve.
    let single = staged_solve(&p, &stages[1..], &rest).unwrap();
    assert_eq!(single.theta, solve(&p, &stages[1], &rest).unwrap().theta);
}

#[test]
fn iteration_limit_is_reported() {
    let p = arm_problem(3, 0.7, [1.1, 0.9, 0.0]);
    let config = SolveConfig {
        max_iterations: 2,
        ..SolveConfig::default()
    };
    let r = solve(&p, &config, p.rest_pose()).unwrap();
    assert_eq!(r.status, SolveStatus::IterationLimit);
    assert_eq!(r.iterations, 2);
}

#[test]
fn rejects_bad_inputs() {
    let (s, b, m, tip) = strip_arm(2, 1.0);
    let bad = ContactPair {
        hand: tip,
        target: Point3::origin(),
        normal: Vector3::new(0.0, 0.0, 2.0),
        weight: 1.0,
    };
    assert!(PoseProblem::new(s.clone(), b.clone(), &m, &[bad]).is_err());
    let p = PoseProblem::new(s, b, &m, &[]).unwrap();
    assert!(solve(&p, &SolveConfig::default(), &[0.0; 3]).is_err());
    assert!(solve(&p, &SolveConfig::default().freezing([99]), p.rest_pose()).is_err());
}
