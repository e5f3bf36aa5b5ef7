use std::path::Path;

use evoq::dtree::{BuildOptions, DecisionTree, NodeKind};
use evoq::envs::{evaluate_greedy, run_episode, EnvId, Environment, EpisodeOptions, Mode};
use evoq::evolve::{evolve, Evaluation, EvolutionConfig};
use evoq::grammar::{decode, parse_grammar, Genotype, Grammar, DEFAULT_MAX_EXPANSIONS};
use evoq::harness::builtin_grammar;
use evoq::qlearn::{train_on_episodes, EarlyStopConfig, EpsilonSchedule, LearningRate, QInit};
use evoq::{seed, Tree};
use proptest::prelude::*;
use rand::Rng;

fn shipped(name: &str) -> Grammar {
    parse_grammar(builtin_grammar(name).unwrap()).unwrap()
}

fn fixture(name: &str) -> Tree {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    Tree::from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Decodes a random genotype, retrying with fresh codons until it maps.
fn random_tree(grammar: &str, env: EnvId, seed_value: u64) -> (Vec<String>, Tree) {
    let g = shipped(grammar);
    let mut rng = seed::rng(seed_value);
    loop {
        let geno = Genotype::random(100, 65_536, &mut rng);
        if let Ok(d) = decode(&geno, &g, DEFAULT_MAX_EXPANSIONS) {
            let tokens: Vec<String> = d.tokens().iter().map(|t| t.to_string()).collect();
            let tree =
                DecisionTree::from_tokens(&d.tokens(), &env.schema(), &BuildOptions::default())
                    .unwrap();
            return (tokens, tree);
        }
    }
}

/// Walks the token stream of an orthogonal tree with fixed actions and
/// returns the action name chosen for `obs`.
fn interpret<'a>(tokens: &'a [String], pos: &mut usize, obs: &[f64], names: &[String]) -> &'a str {
    let t = &tokens[*pos];
    *pos += 1;
    if t != "if" {
        return t;
    }
    let var = names.iter().position(|n| *n == tokens[*pos]).unwrap();
    let op = &tokens[*pos + 1];
    let c: f64 = tokens[*pos + 2].parse().unwrap();
    assert_eq!(tokens[*pos + 3], "then");
    *pos += 4;
    let holds = if op == "lt" {
        obs[var] < c
    } else {
        obs[var] > c
    };
    let a = interpret(tokens, pos, obs, names);
    assert_eq!(tokens[*pos], "else");
    *pos += 1;
    let b = interpret(tokens, pos, obs, names);
    if holds {
        a
    } else {
        b
    }
}

fn learner() -> evoq::LearnerConfig {
    evoq::LearnerConfig {
        epsilon: EpsilonSchedule::Constant { epsilon: 0.05 },
        learning_rate: LearningRate::Constant { alpha: 0.001 },
        init: QInit::Uniform {
            low: -1.0,
            high: 1.0,
        },
        discount: 0.99,
    }
}

/// The decode, initialise and train pipeline of one fitness evaluation.
fn baldwinian(genotype: &Genotype, eval_seed: u64) -> Option<(f64, Tree)> {
    let g = shipped("cartpole_orthogonal");
    let d = decode(genotype, &g, DEFAULT_MAX_EXPANSIONS).ok()?;
    let mut tree = DecisionTree::from_tokens(
        &d.tokens(),
        &EnvId::CartPole.schema(),
        &BuildOptions::default(),
    )
    .unwrap();
    let mut rng = seed::rng(eval_seed);
    tree.init_q(&learner().init, &mut rng);
    let mut env = EnvId::CartPole.make::<f64>();
    env.set_max_steps(100);
    let s = train_on_episodes(
        &mut tree,
        env.as_mut(),
        3,
        &learner(),
        &EarlyStopConfig::default(),
        &mut rng,
    )
    .unwrap();
    Some((s.fitness, tree))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn routing_matches_reference_interpreter(tree_seed in any::<u64>(), obs_seed in any::<u64>()) {
        let (tokens, tree) = random_tree("cartpole_orthogonal_ablation", EnvId::CartPole, tree_seed);
        let names = tree.schema.observations.clone();
        let mut rng = seed::rng(obs_seed);
        for _ in 0..50 {
            let obs: Vec<f64> = vec![
                rng.random_range(-4.8..4.8),
                rng.random_range(-5.0..5.0),
                rng.random_range(-0.418..0.418),
                rng.random_range(-1.0..1.0),
            ];
            let mut pos = 0;
            let expected = interpret(&tokens, &mut pos, &obs, &names);
            prop_assert_eq!(pos, tokens.len());
            let got = tree.leaf_action(tree.route(&obs));
            prop_assert_eq!(tree.schema.actions[got].as_str(), expected);
        }
    }

    #[test]
    fn leaf_visits_account_for_every_step(tree_seed in any::<u64>(), train_seed in any::<u64>()) {
        let (_, mut tree) = random_tree("cartpole_orthogonal", EnvId::CartPole, tree_seed);
        let mut rng = seed::rng(train_seed);
        tree.init_q(&learner().init, &mut rng);
        let mut env = EnvId::CartPole.make::<f64>();
        env.set_max_steps(200);
        let s = train_on_episodes(&mut tree, env.as_mut(), 4, &learner(), &EarlyStopConfig::default(), &mut rng).unwrap();
        // CartPole pays 1 per step, so the scores count steps.
        let steps: f64 = s.scores.iter().sum();
        let mut visits = 0;
        for node in &tree.nodes {
            if let NodeKind::QLeaf(q) = &node.kind {
                prop_assert_eq!(q.action_visits.iter().sum::<u64>(), q.visits);
                visits += q.visits;
            }
        }
        prop_assert_eq!(visits as f64, steps);
    }

    #[test]
    fn same_genotype_and_seed_give_the_same_fitness(geno_seed in any::<u64>(), eval_seed in any::<u64>()) {
        let mut rng = seed::rng(geno_seed);
        let geno = Genotype::random(100, 65_536, &mut rng);
        let before = geno.clone();
        let a = baldwinian(&geno, eval_seed);
        let b = baldwinian(&geno, eval_seed);
        prop_assert_eq!(a, b);
        prop_assert_eq!(geno, before);
    }

    #[test]
    fn greedy_total_is_the_sum_of_step_rewards(episode_seed in any::<u64>(), which in 0usize..4) {
        let (name, env_id) = [
            ("cartpole_orthogonal.json", EnvId::CartPole),
            ("mountaincar_orthogonal.json", EnvId::MountainCar),
            ("mountaincar_oblique.json", EnvId::MountainCar),
            ("lunarlander_oblique.json", EnvId::LunarLander),
        ][which];
        let mut tree = fixture(name);
        let mut env = env_id.make::<f64>();
        env.set_max_steps(300);
        let mut rng = seed::rng(episode_seed);
        let record = run_episode(&mut tree, env.as_mut(), Mode::Greedy, EpisodeOptions::default(), &mut rng).unwrap();

        let mut rng = seed::rng(episode_seed);
        let mut obs = env.reset(&mut rng);
        let (mut total, mut steps) = (0.0, 0);
        loop {
            let action = tree.greedy_at(tree.route(&obs), &mut rng);
            let s = env.step(action).unwrap();
            total += s.reward;
            steps += 1;
            if s.done {
                break;
            }
            obs = s.observation;
        }
        prop_assert_eq!(record.length, steps);
        prop_assert!((record.total_reward - total).abs() < 1e-9);
    }

    #[test]
    fn step_limit_only_truncates(test_seed in any::<u64>()) {
        let tree = fixture("cartpole_orthogonal.json");
        let mut short = EnvId::CartPole.make::<f64>();
        let mut long = EnvId::CartPole.make::<f64>();
        long.set_max_steps(10_000);
        let a = evaluate_greedy(&tree, short.as_mut(), 5, test_seed, false).unwrap();
        let b = evaluate_greedy(&tree, long.as_mut(), 5, test_seed, false).unwrap();
        for (s, l) in a.iter().zip(&b) {
            prop_assert_eq!(s.length, l.length.min(500));
            if l.length < 500 {
                prop_assert_eq!(s.termination, l.termination);
            }
        }
    }

    #[test]
    fn single_precision_routes_agree(obs_seed in any::<u64>()) {
        let tree = fixture("cartpole_orthogonal.json");
        let narrow = tree.cast::<f32>();
        let mut rng = seed::rng(obs_seed);
        for _ in 0..100 {
            let obs32: Vec<f32> = (0..4).map(|_| rng.random_range(-0.5f32..0.5)).collect();
            let obs64: Vec<f64> = obs32.iter().map(|&x| f64::from(x)).collect();
            prop_assert_eq!(tree.route(&obs64), narrow.route(&obs32));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_invariants(
        run_seed in any::<u64>(),
        population in 2usize..12,
        length in 2usize..20,
        cx in prop::sample::select(vec![0.0, 0.8]),
        tournament in prop::option::of(2usize..4),
    ) {
        let cfg = EvolutionConfig {
            population_size: population,
            generations: 6,
            genotype_length: length,
            crossover_probability: cx,
            mutation_probability: 1.0,
            gene_mutation_probability: 0.2,
            tournament_size: tournament,
            codon_max: 100,
            seed: run_seed,
        };
        let fitness = |g: &Genotype, s: u64| -> Result<Evaluation<Genotype>, ()> {
            let noise = (s % 7) as f64 * 1e-3;
            let f = g.codons().iter().map(|&c| f64::from(c)).sum::<f64>() + noise;
            Ok(Evaluation { fitness: f, phenotype: Some(g.clone()) })
        };
        let serial = evolve(&cfg, fitness, Some(1)).unwrap();
        let parallel = evolve(&cfg, fitness, Some(3)).unwrap();
        prop_assert_eq!(&serial.history, &parallel.history);
        prop_assert_eq!(serial.history.len(), cfg.generations + 1);
        for w in serial.history.windows(2) {
            prop_assert!(w[1].best >= w[0].best);
        }
        prop_assert_eq!(serial.population.len(), population);
        for ind in &serial.population {
            prop_assert_eq!(ind.genotype.len(), length);
        }
    }
}
