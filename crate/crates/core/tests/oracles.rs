mod common;

use std::collections::BTreeMap;

use ceg_core::causal::*;
use ceg_core::fixtures::{self, RandomTreeParams};
use ceg_core::intervention::*;
use ceg_core::*;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cases() -> Vec<(Ceg, Vec<&'static str>)> {
    let bushing = Ceg::from_tree(&fixtures::bushing_tree());
    let broken = Ceg::from_tree(&fixtures::bushing_broken_tree());
    let conservator = Ceg::from_tree(&fixtures::conservator_tree());
    vec![
        (bushing.clone(), vec!["w1"]),
        (bushing.clone(), vec!["w2"]),
        (bushing, vec!["w1", "w2"]),
        (broken, vec!["w1"]),
        (conservator.clone(), vec!["w0"]),
        (conservator, vec!["w1", "w2"]),
    ]
}

fn nodes(c: &Ceg, names: &[&str]) -> Vec<NodeId> {
    names.iter().map(|n| node(c, n)).collect()
}

fn check_conditioned(c: &Ceg, w_star: &[NodeId], m: &StochasticManipulation) {
    let idle = conditioned_ceg(c, w_star, Conditioning::Idle).unwrap();
    let manip = manipulated_ceg(c, m).unwrap();
    for (cc, theta) in [(idle, c.edge_thetas().to_vec()), (manip, manipulated_theta(c, m))] {
        let oracle = conditioned_theta_oracle(c, w_star, &theta);
        for (i, expected) in oracle.iter().enumerate() {
            match (cc.edge_of(CegEdgeId(i)), expected) {
                (Some(e), Some(v)) => assert!(close(cc.ceg.edge_theta(e), *v), "{}", c.edge_name(CegEdgeId(i))),
                (None, Some(v)) => assert_eq!(*v, 0.0, "{} was pruned", c.edge_name(CegEdgeId(i))),
                (None, None) => {}
                (Some(_), None) => panic!("{} kept although unreachable", c.edge_name(CegEdgeId(i))),
            }
        }
    }
}

#[test]
fn conditioned_theta_matches_path_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (c, names) in cases() {
        let w_star = nodes(&c, &names);
        let m = random_manipulation(&c, &w_star, &mut rng);
        check_conditioned(&c, &w_star, &m);
    }
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Ceg::from_tree(&fixtures::random_tree(&mut rng, RandomTreeParams::default()));
        let w_star = random_antichain(&c, &mut rng);
        let m = random_manipulation(&c, &w_star, &mut rng);
        check_conditioned(&c, &w_star, &m);
    }
}

#[test]
fn formulas_agree_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (c, names) in cases() {
        let w_star = nodes(&c, &names);
        let y = resolve_devent(&c, "x_f1").unwrap();
        let partition = search_backdoor_partition(&c, &w_star, y);
        for _ in 0..10 {
            let m = random_manipulation(&c, &w_star, &mut rng);
            let truth = effect_oracle(&c, &m, y);
            assert!(close(brute_force_effect(&c, &m, y).unwrap(), truth));
            assert!(close(causal_effect_edge_level(&c, &m, y).unwrap(), truth));
            if names != ["w1", "w2"] || c.name() != Some("conservator") {
                assert!(close(causal_effect_devent(&c, &m, y).unwrap(), truth), "{names:?}");
            }
            if let Some(p) = &partition {
                assert!(close(backdoor_adjustment(&c, &m, p, y).unwrap(), truth));
                assert!(close(backdoor_adjustment_edge_level(&c, &m, p, y).unwrap(), truth));
            }
        }
    }
}

#[test]
fn shared_controlled_devent_needs_the_edge_level_form() {
    // x_o1 and x_o2 label the florets of both w1 and w2.
    let c = Ceg::from_tree(&fixtures::conservator_tree());
    let (w1, w2) = (node(&c, "w1"), node(&c, "w2"));
    let y = resolve_devent(&c, "x_f1").unwrap();

    let unequal = StochasticManipulation::new([(w1, vec![0.1, 0.9]), (w2, vec![0.8, 0.2])]);
    let truth = effect_oracle(&c, &unequal, y);
    assert!(close(causal_effect_edge_level(&c, &unequal, y).unwrap(), truth));
    assert!(!close(causal_effect_devent(&c, &unequal, y).unwrap(), truth));

    let equal = StochasticManipulation::new([(w1, vec![0.1, 0.9]), (w2, vec![0.1, 0.9])]);
    let truth = effect_oracle(&c, &equal, y);
    assert!(close(causal_effect_devent(&c, &equal, y).unwrap(), truth));
    assert!(close(causal_effect_edge_level(&c, &equal, y).unwrap(), truth));
}

#[test]
fn effect_outside_the_intervened_paths_is_zero() {
    let c = Ceg::from_tree(&fixtures::bushing_tree());
    let w1 = node(&c, "w1");
    let m = StochasticManipulation::new([(w1, vec![0.4, 0.3, 0.05, 0.25])]);
    let y = resolve_devent(&c, "x_c5").unwrap();
    assert_eq!(brute_force_effect(&c, &m, y).unwrap(), 0.0);
    assert_eq!(causal_effect_devent(&c, &m, y).unwrap(), 0.0);
    assert_eq!(causal_effect_edge_level(&c, &m, y).unwrap(), 0.0);
    assert!(search_backdoor_partition(&c, &[w1], y).is_some());
}

#[test]
fn moving_mass_to_a_safer_cause_lowers_failure() {
    let c = Ceg::from_tree(&fixtures::bushing_tree());
    let w1 = node(&c, "w1");
    let y = resolve_devent(&c, "x_f1").unwrap();
    let fail_given = |e: &str| {
        let le = c.lambda_edge(edge(&c, e));
        c.mass(&le.intersection(&c.lambda_devent(y))) / c.mass(le)
    };
    assert!(fail_given("w1->w3#1") > fail_given("w1->w4#1"));
    let mut last = f64::INFINITY;
    for step in 0..8 {
        let d = 0.04 * step as f64;
        let m = StochasticManipulation::new([(w1, vec![0.4 - d, 0.3, 0.05 + d, 0.25])]);
        let effect = effect_oracle(&c, &m, y);
        assert!(close(causal_effect_edge_level(&c, &m, y).unwrap(), effect));
        assert!(effect < last);
        last = effect;
    }
}

#[test]
fn fine_cut_uses_idle_probabilities() {
    let c = Ceg::from_tree(&fixtures::conservator_tree());
    let w0 = node(&c, "w0");
    assert!(c.is_fine_cut(&[w0]));
    let cc = conditioned_ceg(&c, &[w0], Conditioning::Idle).unwrap();
    assert_eq!(cc.ceg.edges().len(), c.edges().len());
    for (i, &t) in c.edge_thetas().iter().enumerate() {
        assert!(close(cc.ceg.edge_theta(cc.edge_of(CegEdgeId(i)).unwrap()), t));
    }

    let y = resolve_devent(&c, "x_f1").unwrap();
    let p = partition_from_items(
        &c,
        &[w0],
        PartitionBasis::Positions,
        &[vec!["w3".into(), "w5".into()], vec!["w4".into(), "w6".into()]],
        "stage partition",
    )
    .unwrap();
    let theta = c.edge_thetas().to_vec();
    let idle = path_weights(&c, &theta);
    let mass = |pred: &dyn Fn(&[CegEdgeId]) -> bool| -> f64 {
        c.paths().iter().zip(&idle).filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    };
    let m = StochasticManipulation::new([(w0, vec![0.15, 0.85])]);
    let hat = path_weights(&c, &manipulated_theta(&c, &m));
    let mut by_hand = 0.0;
    for x in ["x_c1", "x_c2"] {
        let x = resolve_devent(&c, x).unwrap();
        let px_hat: f64 = c.paths().iter().zip(&hat).filter(|(p, _)| has_devent(&c, p, x)).map(|(_, w)| w).sum();
        for z in &p.blocks {
            let in_z = |p: &[CegEdgeId]| z.contains(c.paths().iter().position(|q| q == p).unwrap());
            let pz = mass(&|p| in_z(p));
            let pxz = mass(&|p| in_z(p) && has_devent(&c, p, x));
            let pyxz = mass(&|p| in_z(p) && has_devent(&c, p, x) && has_devent(&c, p, y));
            by_hand += pyxz / pxz * pz * px_hat;
        }
    }
    assert!(close(backdoor_adjustment(&c, &m, &p, y).unwrap(), by_hand));
    assert!(close(by_hand, effect_oracle(&c, &m, y)));
}

fn symptom_partition(c: &Ceg, w_star: &[NodeId]) -> BackdoorPartition {
    partition_from_items(
        c,
        w_star,
        PartitionBasis::DEvents,
        &[
            vec!["x_s1".into(), "x_s3".into(), "x_s5".into()],
            vec!["x_s2".into(), "x_s4".into(), "x_s6".into()],
        ],
        "symptom partition",
    )
    .unwrap()
}

#[test]
fn known_partitions_pass_for_random_colour_respecting_theta() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let c = Ceg::from_tree(&fixtures::randomize_theta(&fixtures::bushing_tree(), &mut rng).unwrap());
        let w1 = node(&c, "w1");
        let y = resolve_devent(&c, "x_f1").unwrap();
        let report = check_backdoor_partition(&c, &[w1], &symptom_partition(&c, &[w1]), y).unwrap();
        assert!(report.holds);

        let c = Ceg::from_tree(&fixtures::randomize_theta(&fixtures::conservator_tree(), &mut rng).unwrap());
        let w0 = node(&c, "w0");
        let p = partition_from_items(
            &c,
            &[w0],
            PartitionBasis::Positions,
            &[vec!["w3".into(), "w5".into()], vec!["w4".into(), "w6".into()]],
            "stage partition",
        )
        .unwrap();
        assert!(check_backdoor_partition(&c, &[w0], &p, y).unwrap().holds);
    }
}

#[test]
fn broken_symmetry_fails_with_enumerated_sides() {
    let c = Ceg::from_tree(&fixtures::bushing_broken_tree());
    let w1 = node(&c, "w1");
    let y = resolve_devent(&c, "x_f1").unwrap();
    let p = symptom_partition(&c, &[w1]);
    let report = check_backdoor_partition(&c, &[w1], &p, y).unwrap();
    assert!(!report.holds);
    assert!(!report.criterion_holds(1));
    let idle = path_weights(&c, c.edge_thetas());
    let through = |pred: &dyn Fn(usize) -> bool| -> f64 { (0..c.path_count()).filter(|&i| pred(i)).map(|i| idle[i]).sum() };
    let mut seen = 0;
    for cmp in report.violations().filter(|v| v.criterion == 1) {
        let z = &p.blocks[cmp.block];
        let on_w = |i: usize| visits(&c, &c.paths()[i], &[cmp.position]);
        let on_e = |i: usize| c.paths()[i].contains(&cmp.edge);
        let lhs = through(&|i| on_w(i) && z.contains(i)) / through(&on_w);
        let rhs = through(&|i| on_e(i) && z.contains(i)) / through(&on_e);
        assert!(close(cmp.lhs.unwrap(), lhs));
        assert!(close(cmp.rhs.unwrap(), rhs));
        assert!(!close(lhs, rhs));
        seen += 1;
    }
    assert!(seen > 0);
    assert!(search_backdoor_partition(&c, &[w1], y).is_none());
}

#[test]
fn mixture_matches_hand_computation() {
    let c = Ceg::from_tree(&fixtures::bushing_tree());
    let w1 = node(&c, "w1");
    let y = resolve_devent(&c, "x_f1").unwrap();
    let prior = DirichletFloretPrior::new(
        &c,
        BTreeMap::from([(w1, vec![7.0, 5.0, 5.0, 3.0])]),
        BTreeMap::from([(w1, vec![2.0, 2.0, 2.0, 2.0])]),
    )
    .unwrap();
    let to_m = |v: &[u8], _: &str| -> ceg_core::Result<StochasticManipulation> {
        manipulation_from_indicators(&c, &prior, &InterventionIndicators::from_vector(&c, v)?)
    };
    let i1 = vec![1, 0, 0, 0, 0, 0];
    let i2 = vec![1, 1, 0, 0, 0, 0];
    let rec = RemedialRecord {
        maintenance: Some("tighten gasket".into()),
        delta: false,
        failure_path: Vec::new(),
        remedy_indicators: None,
        actions: vec![
            HiddenAction {
                name: "a1".into(),
                probability: 0.3,
                indicators: Some(IndicatorLaw::Point(i1.clone())),
            },
            HiddenAction {
                name: "a2".into(),
                probability: 0.7,
                indicators: Some(IndicatorLaw::Point(i2.clone())),
            },
        ],
        p_delta: None,
    };
    let mix = expected_effect_imperfect(&c, &rec, &to_m, y).unwrap();
    let e1 = effect_oracle(&c, &to_m(&i1, "").unwrap(), y);
    let e2 = effect_oracle(&c, &to_m(&i2, "").unwrap(), y);
    assert!(close(mix.total, 0.3 * e1 + 0.7 * e2));
    assert!((0.0..=1.0).contains(&mix.total));

    let perfect = RemedialRecord {
        delta: true,
        remedy_indicators: Some(i1.clone()),
        actions: Vec::new(),
        ..rec
    };
    let single = expected_effect_imperfect(&c, &perfect, &to_m, y).unwrap();
    assert_eq!(single.terms.len(), 1);
    assert!(close(single.total, e1));
}
