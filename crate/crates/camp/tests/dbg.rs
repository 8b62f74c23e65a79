use camp::abstraction::{build_camp, CampState};
use camp::contexts::Context;
use camp::csi::{learn_csis, CsiConfig};
use camp::domains::{dinner_bind, DinnerConfig};
use camp::planners::{optimal_search, PlanModel, PlannerConfig, PlannerKind};
use camp::rng::derive_rng;

#[test]
fn dbg_camp_optimal() {
    let t = dinner_bind(&DinnerConfig::default(), [10.0, 50.0, 100.0], "t").unwrap();
    let ctx = Context::universal();
    let mut rng = derive_rng(1, &["csi"]);
    let csis = learn_csis(t.mdp.vars(), t.mdp.transition().as_ref(), &ctx,
        &CsiConfig::with_budgets(10, 4), &mut rng).unwrap();
    let camp = build_camp(&t.mdp, &ctx, &csis).unwrap();
    println!("dropped: {}", camp.n_dropped());
    println!("kept actions: {:?}", camp.kept_action_names());
    println!("abstract actions: {}", camp.abstract_actions().len());
    let s0 = camp.to_model_state(&t.task.initial_state);
    let cfg = PlannerConfig::new(PlannerKind::OptimalSearch);
    let res = optimal_search(&camp, &s0, &cfg).unwrap();
    println!("plan len {}, value {}, expansions {}", res.actions.len(), res.value, res.expansions);
    let direct = optimal_search(&t.mdp, &t.task.initial_state, &cfg).unwrap();
    println!("direct plan len {}, value {}", direct.actions.len(), direct.value);
    let _ = CampState::Sink;
}
