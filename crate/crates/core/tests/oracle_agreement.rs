use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbgp_core::oracle::{
    best_response_fixed_point, check_engine_against_oracle, enumerate_deployments, random_deployment,
    random_hierarchy, Activation, RandomGraphParams, Tiebreak,
};
use sbgp_core::analysis::happy_bounds;
use sbgp_core::partitions::{partition, Label};
use sbgp_core::routing::{check_stability, compute_outcome, LeadsTo, LocalPref, Policy, PolicyModel, Scenario};
use sbgp_core::topology::{AsId, Relationship};

fn pick_pair(rng: &mut ChaCha8Rng, n: usize) -> (AsId, AsId) {
    let d = rng.gen_range(0..n);
    let mut m = rng.gen_range(0..n - 1);
    if m >= d {
        m += 1;
    }
    (AsId(m as u32), AsId(d as u32))
}

#[test]
fn engine_matches_best_response_on_random_graphs() {
    let params = RandomGraphParams::default();
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_hierarchy(&mut rng, &params);
        let (m, d) = pick_pair(&mut rng, g.len());
        let dep = random_deployment(&mut rng, &g, 0.5);
        let attacker = rng.gen_bool(0.8).then_some(m);
        let sc = Scenario { destination: d, attacker, deployment: &dep };
        for model in [PolicyModel::SecurityFirst, PolicyModel::SecuritySecond, PolicyModel::SecurityThird, PolicyModel::InsecureOnly] {
            let lp = if rng.gen_bool(0.25) { LocalPref::LengthClasses(rng.gen_range(1..4)) } else { LocalPref::Standard };
            let policy = Policy::with_local_pref(model, lp);
            let out = compute_outcome(&g, &sc, policy).unwrap();
            check_stability(&g, &sc, policy, &out).unwrap();
            if let Err(e) = check_engine_against_oracle(&g, &sc, policy, &out) {
                panic!("seed {seed} {policy:?}: {e}");
            }
        }
    }
}

#[test]
fn fixed_point_is_independent_of_activation_order() {
    let params = RandomGraphParams::default();
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let g = random_hierarchy(&mut rng, &params);
        let (m, d) = pick_pair(&mut rng, g.len());
        let dep = random_deployment(&mut rng, &g, 0.5);
        let sc = Scenario { destination: d, attacker: Some(m), deployment: &dep };
        for model in PolicyModel::SECURE_MODELS {
            let prefs = sbgp_core::oracle::uniform(model.into());
            let tb = Tiebreak::lowest_id();
            let reference = best_response_fixed_point(&g, &sc, &prefs, &tb, Activation::Sweep).unwrap();
            for order in 0..10 {
                let s = best_response_fixed_point(&g, &sc, &prefs, &tb, Activation::Random(order)).unwrap();
                assert_eq!(s, reference, "seed {seed} order {order} {model:?}");
            }
        }
    }
}

#[test]
fn partitions_agree_with_enumeration() {
    let params = RandomGraphParams { max_nodes: env_or("SBGP_ORACLE_MAXN", 9) as usize, ..Default::default() };
    for seed in 0..env_or("SBGP_ORACLE_GRAPHS", 60) {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let g = random_hierarchy(&mut rng, &params);
        let (m, d) = pick_pair(&mut rng, g.len());
        for model in PolicyModel::SECURE_MODELS {
            let truth = enumerate_deployments(&g, m, d, model.into()).unwrap();
            let ours = partition(&g, m, d, model.into(), true).unwrap().labels;
            for v in g.ids() {
                let (o, t) = (ours[v.index()], truth[v.index()]);
                let ok = match model {
                    // Exact mode only commits to sufficient conditions.
                    PolicyModel::SecurityFirst => o == Label::Protectable || o == t,
                    _ => o == t,
                };
                if !ok {
                    let mut txt = Vec::new();
                    sbgp_core::topology::write_relationships(&g, &mut txt).unwrap();
                    panic!(
                        "seed {seed} {model:?} m={} d={} v={}: ours {o:?}, enumeration {t:?}\n{}",
                        g.asn(m),
                        g.asn(d),
                        g.asn(v),
                        String::from_utf8_lossy(&txt)
                    );
                }
            }
        }
    }
}

#[test]
fn happy_bounds_match_every_tiebreak_completion() {
    let params = RandomGraphParams::default();
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let g = random_hierarchy(&mut rng, &params);
        let (m, d) = pick_pair(&mut rng, g.len());
        let dep = random_deployment(&mut rng, &g, 0.4);
        let sc = Scenario { destination: d, attacker: Some(m), deployment: &dep };
        let model = PolicyModel::SECURE_MODELS[seed as usize % 3];
        let prefs = sbgp_core::oracle::uniform(model.into());
        let base = best_response_fixed_point(&g, &sc, &prefs, &Tiebreak::lowest_id(), Activation::Sweep).unwrap();
        let tied: Vec<(AsId, Vec<AsId>)> = base
            .describe(&g, &sc, &prefs)
            .into_iter()
            .enumerate()
            .filter(|(_, r)| r.ties.len() > 1)
            .map(|(i, r)| (AsId(i as u32), r.ties))
            .collect();
        let combos: usize = tied.iter().map(|(_, t)| t.len()).product();
        if combos > 512 {
            continue;
        }
        let mut seen = vec![LeadsTo::Unreachable; g.len()];
        for mut k in 0..combos {
            let favorites = tied.iter().map(|(v, t)| {
                let f = t[k % t.len()];
                k /= t.len();
                (*v, f)
            });
            let tb = Tiebreak::with_favorites(favorites.collect::<Vec<_>>(), g.len());
            let st = best_response_fixed_point(&g, &sc, &prefs, &tb, Activation::Sweep).unwrap();
            for v in g.ids() {
                let end = match &st.paths[v.index()] {
                    None => LeadsTo::Unreachable,
                    Some(p) if p.contains(&m) => LeadsTo::Attacker,
                    Some(_) => LeadsTo::Destination,
                };
                seen[v.index()] = seen[v.index()].union(end);
            }
        }
        let out = compute_outcome(&g, &sc, model.into()).unwrap();
        let b = happy_bounds(&out);
        let sources = g.ids().filter(|&v| v != m && v != d);
        let lower = sources.clone().filter(|v| seen[v.index()] == LeadsTo::Destination).count() as u64;
        let upper = sources.filter(|v| seen[v.index()].may_reach_destination()).count() as u64;
        assert_eq!((b.lower, b.upper), (lower, upper), "seed {seed} {model:?}");
        checked += 1;
    }
    assert!(checked > 150, "only {checked} instances small enough");
}

#[test]
fn unbounded_length_classes_match_collapsed_preference() {
    let params = RandomGraphParams::default();
    for seed in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(12_000 + seed);
        let g = random_hierarchy(&mut rng, &params);
        let (m, d) = pick_pair(&mut rng, g.len());
        let dep = random_deployment(&mut rng, &g, 0.5);
        let sc = Scenario { destination: d, attacker: Some(m), deployment: &dep };
        let model = [PolicyModel::SecurityFirst, PolicyModel::SecuritySecond, PolicyModel::SecurityThird, PolicyModel::InsecureOnly]
            [seed as usize % 4];
        // Non-provider routes compete on length first, customer over peer
        // second; provider routes form one class.
        let prefs = move |_: AsId, rel: Relationship, len: u32, secure: bool| {
            let provider = u32::from(rel == Relationship::Provider);
            let class_len = if provider == 1 { 0 } else { len };
            let peer = u32::from(rel == Relationship::Peer);
            let insecure = u32::from(!secure);
            match model {
                PolicyModel::SecurityFirst => [insecure, provider, class_len, peer, len],
                PolicyModel::SecuritySecond => [provider, class_len, peer, insecure, len],
                PolicyModel::SecurityThird => [provider, class_len, peer, len, insecure],
                PolicyModel::InsecureOnly => [provider, class_len, peer, len, 0],
            }
        };
        let st = best_response_fixed_point(&g, &sc, &prefs, &Tiebreak::lowest_id(), Activation::Sweep).unwrap();
        let policy = Policy::with_local_pref(model, LocalPref::LengthClasses(g.len() as u32));
        let out = compute_outcome(&g, &sc, policy).unwrap();
        for v in g.ids() {
            let mut path = out.canonical_path(v);
            if path.last() == Some(&m) {
                path.push(d);
            }
            assert_eq!(st.paths[v.index()].clone().unwrap_or_default(), path, "seed {seed} {model:?} at {v}");
        }
    }
}

fn env_or(key: &str, default: u64) -> u64 {
    std::env::var(key).ok().and_then(|s| s.parse().ok()).unwrap_or(default)
}
