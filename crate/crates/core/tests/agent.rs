use kadt::agent::{AgentConfig, AgentNets, Schedule, Teacher, Transition};
use kadt::baselines::TeacherKind;
use kadt::harness::{load_dataset, prepare_data, ExperimentConfig};
use kadt::numerics::{Parameterized, Rng};
use kadt::student::{build_student, StudentKind};

fn small() -> AgentConfig {
    AgentConfig {
        hidden_units: 8,
        attention_hidden: 4,
        ..AgentConfig::default()
    }
}

fn batch(state_dim: usize, o: usize, rng: &mut Rng) -> Vec<Transition> {
    (0..16)
        .map(|_| {
            let mut action: Vec<f64> = (0..o).map(|_| rng.uniform()).collect();
            let s: f64 = action.iter().sum();
            action.iter_mut().for_each(|a| *a /= s);
            Transition {
                state: (0..state_dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
                action,
                reward: rng.uniform_range(-0.1, 0.1),
                next_state: (0..state_dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
                pool_inputs: None,
            }
        })
        .collect()
}

fn param_values(m: &impl Parameterized) -> Vec<Vec<f64>> {
    m.params().iter().map(|p| p.value.data().to_vec()).collect()
}

/// Makes the critic a monotone function of the first action coordinate only.
fn critic_prefers_first_class(nets: &mut AgentNets, state_dim: usize) {
    let mut ps = nets.critic.params_mut();
    for p in ps.iter_mut() {
        p.value.fill(0.0);
    }
    ps[0].value.set(state_dim, 0, 0.5);
    ps[2].value.set(0, 0, 1.0);
    ps[4].value.set(0, 0, 1.0);
}

#[test]
fn actor_follows_critic_preference() {
    let (s, o) = (4, 3);
    let mut rng = Rng::new(11);
    let mut nets = AgentNets::new(s, o, 2, false, &small(), &mut rng).unwrap();
    critic_prefers_first_class(&mut nets, s);
    let data = batch(s, o, &mut rng);
    let refs: Vec<&Transition> = data.iter().collect();
    let mean_first = |nets: &AgentNets| {
        data.iter()
            .map(|t| nets.select_action(&t.state, None).unwrap()[0])
            .sum::<f64>()
            / data.len() as f64
    };
    let before = mean_first(&nets);
    let critic = param_values(&nets.critic);
    for _ in 0..200 {
        nets.actor_update(&refs).unwrap();
    }
    assert!(mean_first(&nets) > before + 0.01, "{before} -> {}", mean_first(&nets));
    assert_eq!(param_values(&nets.critic), critic);
}

#[test]
fn actor_update_leaves_critic_and_targets_bitwise() {
    let mut rng = Rng::new(2);
    let mut nets = AgentNets::new(6, 3, 2, false, &small(), &mut rng).unwrap();
    let data = batch(6, 3, &mut rng);
    let refs: Vec<&Transition> = data.iter().collect();
    let (critic, ta, tc) = (
        param_values(&nets.critic),
        param_values(&nets.target_actor),
        param_values(&nets.target_critic),
    );
    let actor = param_values(&nets.actor);
    nets.actor_update(&refs).unwrap();
    assert_eq!(param_values(&nets.critic), critic);
    assert_eq!(param_values(&nets.target_actor), ta);
    assert_eq!(param_values(&nets.target_critic), tc);
    assert_ne!(param_values(&nets.actor), actor);
}

#[test]
fn critic_update_touches_only_the_critic() {
    let mut rng = Rng::new(4);
    let mut nets = AgentNets::new(6, 3, 2, false, &small(), &mut rng).unwrap();
    let data = batch(6, 3, &mut rng);
    let refs: Vec<&Transition> = data.iter().collect();
    let actor = param_values(&nets.actor);
    let critic = param_values(&nets.critic);
    nets.critic_update(&refs, 0.99).unwrap();
    assert_eq!(param_values(&nets.actor), actor);
    assert_ne!(param_values(&nets.critic), critic);
}

#[test]
fn soft_update_extremes() {
    let mut rng = Rng::new(8);
    let mut nets = AgentNets::new(4, 2, 2, false, &small(), &mut rng).unwrap();
    let data = batch(4, 2, &mut rng);
    let refs: Vec<&Transition> = data.iter().collect();
    nets.critic_update(&refs, 0.99).unwrap();
    nets.actor_update(&refs).unwrap();

    let (ta, tc) = (param_values(&nets.target_actor), param_values(&nets.target_critic));
    nets.soft_update_targets(0.0).unwrap();
    assert_eq!(param_values(&nets.target_actor), ta);
    assert_eq!(param_values(&nets.target_critic), tc);

    nets.soft_update_targets(1.0).unwrap();
    assert_eq!(param_values(&nets.target_actor), param_values(&nets.actor));
    assert_eq!(param_values(&nets.target_critic), param_values(&nets.critic));
    assert!(nets.soft_update_targets(1.5).is_err());
}

fn teacher_setup(kind: TeacherKind) -> (ExperimentConfig, kadt::agent::TeachingData) {
    let cfg = ExperimentConfig {
        teacher: kind,
        ..ExperimentConfig::default()
    };
    let dataset = load_dataset(&cfg).unwrap();
    let data = prepare_data(&dataset, &cfg, 0).unwrap();
    (cfg, data)
}

#[test]
fn single_interaction_stores_one_transition() {
    for kind in [
        TeacherKind::Kadt,
        TeacherKind::KadtKt,
        TeacherKind::KadtBasic,
        TeacherKind::L2t,
    ] {
        let (cfg, data) = teacher_setup(kind);
        let mut rng = Rng::new(1);
        let mut teacher = Teacher::new(kind.stack().unwrap(), cfg.agent.clone(), cfg.kt, &data, &mut rng).unwrap();
        let mut student = build_student(StudentKind::Mlp, data.train.feature_dim(), 2, &cfg.student, &mut rng);
        let sched = Schedule {
            episodes: 1,
            steps: 1,
            batch_size: 16,
        };
        let log = teacher.run_training(student.as_mut(), &data, &sched, &mut rng).unwrap();
        assert_eq!(log.steps.len(), 1);
        assert_eq!(log.episodes.len(), 1);
        assert_eq!(teacher.replay().len(), 1, "{kind}");
        assert_eq!(teacher.tracer().is_some(), kind.stack().unwrap().uses_knowledge());
    }
}

#[test]
fn frozen_policy_changes_nothing_on_the_teacher() {
    let (cfg, data) = teacher_setup(TeacherKind::Kadt);
    let mut rng = Rng::new(6);
    let mut teacher = Teacher::new(
        TeacherKind::Kadt.stack().unwrap(),
        cfg.agent.clone(),
        cfg.kt,
        &data,
        &mut rng,
    )
    .unwrap();
    let mut student = build_student(StudentKind::Mlp, data.train.feature_dim(), 2, &cfg.student, &mut rng);
    let sched = Schedule {
        episodes: 2,
        steps: 6,
        batch_size: 16,
    };
    teacher.run_training(student.as_mut(), &data, &sched, &mut rng).unwrap();
    let (sum, stored) = (teacher.checksum(), teacher.replay().len());
    let mut fresh = build_student(
        StudentKind::Logistic,
        data.train.feature_dim(),
        2,
        &cfg.student,
        &mut rng,
    );
    let log = teacher
        .run_frozen_policy(fresh.as_mut(), &data, &sched, &mut rng)
        .unwrap();
    assert_eq!(teacher.checksum(), sum);
    assert_eq!(teacher.replay().len(), stored);
    assert!(log.steps.iter().all(|s| s.phase == 2 && s.critic_loss.is_none()));
}
