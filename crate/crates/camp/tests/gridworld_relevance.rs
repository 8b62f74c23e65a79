use camp::abstraction::relevant_variables;
use camp::contexts::{Atom, Context};
use camp::csi::{learn_csis, CsiConfig};
use camp::domains::{gridworld_sample_task, GridworldConfig};
use camp::core::VarId;
use camp::rng::derive_rng;

#[test]
fn forbidden_room_obstacles_become_irrelevant() {
    let cfg = GridworldConfig::fast();
    let mut rng = derive_rng(42, &["probe"]);
    let grid = gridworld_sample_task(&cfg, "probe", &mut rng).unwrap();
    let vars = grid.mdp.vars();
    let reward_ids: Vec<VarId> = grid
        .mdp
        .reward_vars()
        .iter()
        .map(|n| vars.lookup(n).unwrap())
        .collect();

    for room in 0..4 {
        let ctx = Context::literal(Atom::new(vars, "agent_room", room as i64, true).unwrap());
        let mut crng = derive_rng(7, &["csi", &room.to_string()]);
        let csis = learn_csis(
            vars,
            grid.mdp.transition().as_ref(),
            &ctx,
            &CsiConfig::with_budgets(50, 50),
            &mut crng,
        )
        .unwrap();
        let relevant = relevant_variables(&csis, &reward_ids, vars);
        let names: Vec<&str> = relevant.iter().map(|id| vars.spec(*id).name.as_str()).collect();
        for i in 0..cfg.n_obstacles {
            let home = i % 4;
            let pos = format!("obst{i}_pos");
            let alive = format!("obst{i}_alive");
            let remove = format!("remove{i}");
            if home == room {
                assert!(!names.contains(&pos.as_str()), "room {room}: {pos} should be irrelevant; relevant = {names:?}");
                assert!(!names.contains(&alive.as_str()), "room {room}: {alive} should be irrelevant");
                assert!(!names.contains(&remove.as_str()), "room {room}: {remove} should be irrelevant");
            } else {
                assert!(names.contains(&pos.as_str()), "room {room}: {pos} should be relevant; relevant = {names:?}");
                assert!(names.contains(&alive.as_str()), "room {room}: {alive} should be relevant");
            }
        }
        assert!(names.contains(&"agent_pos"), "agent_pos relevant");
        assert!(names.contains(&"move"), "move relevant");
    }
}
