//! Maze-style gridworld: four rooms split by one vertical and one horizontal
//! wall, connected by four doorway cells. The agent navigates to a goal cell
//! while obstacles wander their home rooms; colliding with an alive obstacle
//! teleports the agent back to its initial cell. A `remove` action kills an
//! adjacent obstacle for good.
//!
//! Positions are encoded as (room, offset-within-room) pairs so that room
//! constraints stay consistent with positions under joint-domain sampling.
//! Obstacles move only on their room's interior cells (room cells not
//! adjacent to a doorway), and each obstacle is bound to room `i % 4` across
//! all tasks of a domain instance.

use crate::contexts::ContextGenConfig;
use crate::core::{
    FactoredAction, FactoredMdp, FactoredState, MdpBuilder, Task, TransitionFn, VariableSpec, Vars,
};
use crate::error::{CampError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

pub const N_ROOMS: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    pub n_obstacles: usize,
    pub obstacle_move_prob: f64,
    pub goal_reward: f64,
    pub horizon: usize,
    pub gamma: f64,
    /// Wall split positions are sampled within this many cells of center.
    pub wall_jitter: usize,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        Self {
            width: 11,
            height: 11,
            n_obstacles: 2,
            obstacle_move_prob: 1.0,
            goal_reward: 1000.0,
            horizon: 25,
            gamma: 0.99,
            wall_jitter: 1,
        }
    }
}

impl GridworldConfig {
    /// Small instance solvable by offline value iteration.
    pub fn vi_scale() -> Self {
        Self { width: 7, height: 7, n_obstacles: 1, wall_jitter: 0, ..Self::default() }
    }

    /// Reduced instance for fast test runs.
    pub fn fast() -> Self {
        Self { width: 9, height: 9, ..Self::default() }
    }
}

/// Everything that varies between tasks, in serializable form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GridManifest {
    pub width: usize,
    pub height: usize,
    /// Vertical wall column and horizontal wall row.
    pub vx: usize,
    pub hy: usize,
    /// Doorway coordinates: row of the 0-1 door, row of the 2-3 door,
    /// column of the 0-2 door, column of the 1-3 door.
    pub door01_y: usize,
    pub door23_y: usize,
    pub door02_x: usize,
    pub door13_x: usize,
    /// Initial obstacle cells (obstacle `i` lives in room `i % 4`).
    pub obstacle_cells: Vec<usize>,
    pub agent_cell: usize,
    pub goal_cell: usize,
}

/// Geometry derived from a manifest: cell/room lookup tables.
#[derive(Debug, Clone)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    wall: Vec<bool>,
    /// Per free cell: (room, offset in that room's cell list).
    cell_room: HashMap<usize, (usize, usize)>,
    /// Per room: ordered cell list (quadrant cells row-major, then its
    /// assigned doorway cells).
    room_cells: Vec<Vec<usize>>,
    /// Per room: interior cells (room cells not adjacent to any doorway and
    /// not doorways themselves).
    interiors: Vec<Vec<usize>>,
    doors: [usize; 4],
}

impl GridLayout {
    pub fn from_manifest(m: &GridManifest) -> Result<Self> {
        let (w, h) = (m.width, m.height);
        let at = |x: usize, y: usize| y * w + x;
        if m.vx == 0 || m.vx >= w - 1 || m.hy == 0 || m.hy >= h - 1 {
            return Err(CampError::InvalidAssignment("wall splits out of range".into()));
        }
        let doors = [
            at(m.vx, m.door01_y),
            at(m.vx, m.door23_y),
            at(m.door02_x, m.hy),
            at(m.door13_x, m.hy),
        ];
        if m.door01_y >= m.hy
            || m.door23_y <= m.hy
            || m.door23_y >= h
            || m.door02_x >= m.vx
            || m.door13_x <= m.vx
            || m.door13_x >= w
        {
            return Err(CampError::InvalidAssignment("doorways off their walls".into()));
        }

        let mut wall = vec![false; w * h];
        for y in 0..h {
            wall[at(m.vx, y)] = true;
        }
        for x in 0..w {
            wall[at(x, m.hy)] = true;
        }
        for &d in &doors {
            wall[d] = false;
        }

        // Quadrant of a non-wall, non-door cell.
        let quadrant = |cell: usize| -> usize {
            let (x, y) = (cell % w, cell / w);
            match (x < m.vx, y < m.hy) {
                (true, true) => 0,
                (false, true) => 1,
                (true, false) => 2,
                (false, false) => 3,
            }
        };
        // Doorways belong to the lower-indexed room of their pair.
        let door_room = [0usize, 2, 0, 1];

        let mut room_cells: Vec<Vec<usize>> = vec![Vec::new(); N_ROOMS];
        for y in 0..h {
            for x in 0..w {
                let c = at(x, y);
                if !wall[c] && !doors.contains(&c) {
                    room_cells[quadrant(c)].push(c);
                }
            }
        }
        for (d, &cell) in doors.iter().enumerate() {
            room_cells[door_room[d]].push(cell);
        }

        let mut cell_room = HashMap::new();
        for (room, cells) in room_cells.iter().enumerate() {
            for (offset, &c) in cells.iter().enumerate() {
                cell_room.insert(c, (room, offset));
            }
        }

        let neighbors = |cell: usize| -> Vec<usize> {
            let (x, y) = (cell % w, cell / w);
            let mut out = Vec::with_capacity(4);
            if y > 0 {
                out.push(at(x, y - 1));
            }
            if y + 1 < h {
                out.push(at(x, y + 1));
            }
            if x > 0 {
                out.push(at(x - 1, y));
            }
            if x + 1 < w {
                out.push(at(x + 1, y));
            }
            out
        };
        let mut near_door = vec![false; w * h];
        for &d in &doors {
            near_door[d] = true;
            for n in neighbors(d) {
                near_door[n] = true;
            }
        }
        let interiors: Vec<Vec<usize>> = room_cells
            .iter()
            .map(|cells| cells.iter().copied().filter(|&c| !near_door[c]).collect())
            .collect();

        let layout = Self {
            width: w,
            height: h,
            wall,
            cell_room,
            room_cells,
            interiors,
            doors,
        };
        // Every room must be reachable and have a non-empty interior.
        if layout.interiors.iter().any(|i| i.is_empty()) {
            return Err(CampError::InvalidAssignment("a room has no interior cells".into()));
        }
        if !layout.all_rooms_connected() {
            return Err(CampError::InvalidAssignment("rooms are not connected".into()));
        }
        Ok(layout)
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.wall[cell]
    }

    pub fn doors(&self) -> &[usize; 4] {
        &self.doors
    }

    /// Room and in-room offset of a free cell.
    pub fn room_of(&self, cell: usize) -> Option<(usize, usize)> {
        self.cell_room.get(&cell).copied()
    }

    pub fn cell_at(&self, room: usize, offset: usize) -> usize {
        let cells = &self.room_cells[room];
        cells[offset % cells.len()]
    }

    pub fn room_len(&self, room: usize) -> usize {
        self.room_cells[room].len()
    }

    pub fn max_room_len(&self) -> usize {
        self.room_cells.iter().map(Vec::len).max().unwrap()
    }

    pub fn interior(&self, room: usize) -> &[usize] {
        &self.interiors[room]
    }

    pub fn free_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width * self.height).filter(|&c| !self.wall[c])
    }

    fn cell_neighbors(&self, cell: usize) -> Vec<usize> {
        let w = self.width;
        let (x, y) = (cell % w, cell / w);
        let mut out = Vec::with_capacity(4);
        if y > 0 {
            out.push(cell - w);
        }
        if y + 1 < self.height {
            out.push(cell + w);
        }
        if x > 0 {
            out.push(cell - 1);
        }
        if x + 1 < w {
            out.push(cell + 1);
        }
        out
    }

    fn all_rooms_connected(&self) -> bool {
        let start = match self.free_cells().next() {
            Some(c) => c,
            None => return false,
        };
        let mut seen = vec![false; self.width * self.height];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(c) = stack.pop() {
            for n in self.cell_neighbors(c) {
                if !self.wall[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        self.free_cells().all(|c| seen[c])
    }

    /// Interior cells of `room` 4-adjacent to `cell`.
    fn interior_neighbors(&self, room: usize, cell: usize) -> Vec<usize> {
        self.cell_neighbors(cell)
            .into_iter()
            .filter(|n| self.interiors[room].contains(n))
            .collect()
    }
}

/// Variable layout of the factored encoding.
///
/// State: `agent_pos` (offset), `agent_room`, `agent_init` (cell, constant),
/// `goal` (cell, constant), then per obstacle `obst{i}_pos` (offset into its
/// room's interior list), `obst{i}_room` (constant), `obst{i}_alive`.
/// Actions: `move` in {up, down, left, right} plus one binary `remove{i}`
/// per obstacle (removals resolve before movement and require 4-adjacency).
const AGENT_POS: usize = 0;
const AGENT_ROOM: usize = 1;
const AGENT_INIT: usize = 2;
const GOAL: usize = 3;
const OBST_BASE: usize = 4;
const OBST_STRIDE: usize = 3; // pos, room, alive

fn obst_pos(i: usize) -> usize {
    OBST_BASE + i * OBST_STRIDE
}
fn obst_alive(i: usize) -> usize {
    OBST_BASE + i * OBST_STRIDE + 2
}

pub fn home_room(obstacle: usize) -> usize {
    obstacle % N_ROOMS
}

struct GridTransition {
    layout: GridLayout,
    n_obstacles: usize,
    move_prob: f64,
    /// The agent's initial cell, the collision teleport target.
    init_cell: usize,
}

impl GridTransition {
    fn agent_cell(&self, s: &FactoredState) -> usize {
        self.layout.cell_at(s.values[AGENT_ROOM] as usize, s.values[AGENT_POS] as usize)
    }

    fn obstacle_cell(&self, s: &FactoredState, i: usize) -> usize {
        let room = home_room(i);
        let interior = self.layout.interior(room);
        interior[s.values[obst_pos(i)] as usize % interior.len()]
    }

    /// Per-obstacle move outcomes as (interior offset, probability).
    fn obstacle_outcomes(&self, s: &FactoredState, i: usize) -> Vec<(u16, f64)> {
        let room = home_room(i);
        let interior = self.layout.interior(room);
        let cur_off = s.values[obst_pos(i)] as usize % interior.len();
        if s.values[obst_alive(i)] == 0 {
            return vec![(cur_off as u16, 1.0)];
        }
        let cur_cell = interior[cur_off];
        let candidates = self.layout.interior_neighbors(room, cur_cell);
        if candidates.is_empty() {
            return vec![(cur_off as u16, 1.0)];
        }
        let p_move = self.move_prob / candidates.len() as f64;
        let mut out: Vec<(u16, f64)> = candidates
            .iter()
            .map(|c| {
                let off = interior.iter().position(|x| x == c).unwrap() as u16;
                (off, p_move)
            })
            .collect();
        if self.move_prob < 1.0 {
            out.push((cur_off as u16, 1.0 - self.move_prob));
        }
        out
    }

    /// Deterministic parts: removals then the agent move. Returns the next
    /// state with obstacle offsets still untouched, plus the agent's old and
    /// new cells.
    fn resolve_agent(&self, s: &FactoredState, a: &FactoredAction) -> (FactoredState, usize, usize) {
        let mut next = s.clone();
        // canonicalize the agent offset
        let room = s.values[AGENT_ROOM] as usize;
        next.values[AGENT_POS] = (s.values[AGENT_POS] as usize % self.layout.room_len(room)) as u16;
        let agent_old = self.agent_cell(&next);

        // removals first: flag set, obstacle alive, agent 4-adjacent
        for i in 0..self.n_obstacles {
            if a.values[1 + i] == 1 && next.values[obst_alive(i)] == 1 {
                let oc = self.obstacle_cell(&next, i);
                if self.layout.cell_neighbors(agent_old).contains(&oc) {
                    next.values[obst_alive(i)] = 0;
                }
            }
        }

        // agent move: blocked by walls and the border
        let w = self.layout.width as isize;
        let (x, y) = ((agent_old % self.layout.width) as isize, (agent_old / self.layout.width) as isize);
        let (dx, dy) = match a.values[0] {
            0 => (0, -1), // up
            1 => (0, 1),  // down
            2 => (-1, 0), // left
            _ => (1, 0),  // right
        };
        let (nx, ny) = (x + dx, y + dy);
        let agent_new = if nx < 0 || ny < 0 || nx >= w || ny >= self.layout.height as isize {
            agent_old
        } else {
            let target = (ny as usize) * self.layout.width + nx as usize;
            if self.layout.is_wall(target) {
                agent_old
            } else {
                target
            }
        };
        let (nr, no) = self.layout.room_of(agent_new).unwrap();
        next.values[AGENT_ROOM] = nr as u16;
        next.values[AGENT_POS] = no as u16;
        (next, agent_old, agent_new)
    }

    /// Applies obstacle offsets and the collision rule (shared cell after
    /// moves, or a simultaneous swap): a collision puts the agent back at
    /// its initial cell.
    fn finish(
        &self,
        mut next: FactoredState,
        s: &FactoredState,
        agent_old: usize,
        agent_new: usize,
        obstacle_offsets: &[u16],
    ) -> FactoredState {
        let mut collided = false;
        for i in 0..self.n_obstacles {
            next.values[obst_pos(i)] = obstacle_offsets[i];
            if next.values[obst_alive(i)] == 0 {
                continue;
            }
            let obst_old = self.obstacle_cell(s, i);
            let obst_new = self.obstacle_cell(&next, i);
            if obst_new == agent_new || (obst_new == agent_old && obst_old == agent_new) {
                collided = true;
            }
        }
        if collided {
            let (r, o) = self.layout.room_of(self.init_cell).unwrap();
            next.values[AGENT_ROOM] = r as u16;
            next.values[AGENT_POS] = o as u16;
        }
        next
    }
}

struct GridTransitionFull {
    inner: GridTransition,
}

impl TransitionFn for GridTransitionFull {
    fn sample(&self, s: &FactoredState, a: &FactoredAction, rng: &mut ChaCha8Rng) -> FactoredState {
        let t = &self.inner;
        let (next, agent_old, agent_new) = t.resolve_agent(s, a);
        let offsets: Vec<u16> = (0..t.n_obstacles)
            .map(|i| {
                let outcomes = t.obstacle_outcomes(&next, i);
                let mut u: f64 = rng.gen();
                for &(off, p) in &outcomes {
                    if u < p {
                        return off;
                    }
                    u -= p;
                }
                outcomes.last().unwrap().0
            })
            .collect();
        t.finish(next, s, agent_old, agent_new, &offsets)
    }

    fn dist(&self, s: &FactoredState, a: &FactoredAction) -> Option<Vec<(FactoredState, f64)>> {
        let t = &self.inner;
        let (next, agent_old, agent_new) = t.resolve_agent(s, a);
        let per_obstacle: Vec<Vec<(u16, f64)>> =
            (0..t.n_obstacles).map(|i| t.obstacle_outcomes(&next, i)).collect();
        let mut combos: Vec<(Vec<u16>, f64)> = vec![(Vec::new(), 1.0)];
        for outcomes in &per_obstacle {
            let mut grown = Vec::with_capacity(combos.len() * outcomes.len());
            for (prefix, p) in &combos {
                for &(off, q) in outcomes {
                    let mut ext = prefix.clone();
                    ext.push(off);
                    grown.push((ext, p * q));
                }
            }
            combos = grown;
        }
        let mut agg: HashMap<FactoredState, f64> = HashMap::new();
        for (offsets, p) in combos {
            let out = t.finish(next.clone(), s, agent_old, agent_new, &offsets);
            *agg.entry(out).or_insert(0.0) += p;
        }
        let mut dist: Vec<(FactoredState, f64)> = agg.into_iter().collect();
        dist.sort_by(|(a, _), (b, _)| a.cmp(b));
        Some(dist)
    }

    fn most_likely(&self, s: &FactoredState, a: &FactoredAction) -> Result<FactoredState> {
        let t = &self.inner;
        let (next, agent_old, agent_new) = t.resolve_agent(s, a);
        // per-obstacle argmax, ties toward the first (lowest-offset) outcome
        let offsets: Vec<u16> = (0..t.n_obstacles)
            .map(|i| {
                let outcomes = t.obstacle_outcomes(&next, i);
                outcomes
                    .iter()
                    .copied()
                    .max_by(|(oa, pa), (ob, pb)| {
                        pa.partial_cmp(pb).unwrap().then_with(|| ob.cmp(oa))
                    })
                    .unwrap()
                    .0
            })
            .collect();
        Ok(t.finish(next, s, agent_old, agent_new, &offsets))
    }
}

/// A sampled, bound gridworld task.
pub struct GridTask {
    pub manifest: GridManifest,
    pub layout: GridLayout,
    pub mdp: FactoredMdp,
    pub task: Task,
}

/// Samples the varying parts of a task: wall splits, doorway positions,
/// obstacle placements, agent start, and goal. Unreachable-goal layouts
/// regenerate (bounded retries); room connectivity is guaranteed by
/// construction, so retries only fire on placement clashes.
pub fn gridworld_sample_manifest(cfg: &GridworldConfig, rng: &mut ChaCha8Rng) -> Result<GridManifest> {
    let (w, h) = (cfg.width, cfg.height);
    if w < 7 || h < 7 {
        return Err(CampError::InvalidAssignment("grid must be at least 7x7".into()));
    }
    for _attempt in 0..100 {
        let jitter = |c: usize, max: usize, rng: &mut ChaCha8Rng| -> usize {
            if cfg.wall_jitter == 0 {
                c
            } else {
                let lo = c.saturating_sub(cfg.wall_jitter).max(2);
                let hi = (c + cfg.wall_jitter).min(max - 3);
                rng.gen_range(lo..=hi)
            }
        };
        let vx = jitter(w / 2, w, rng);
        let hy = jitter(h / 2, h, rng);
        let manifest = GridManifest {
            width: w,
            height: h,
            vx,
            hy,
            door01_y: rng.gen_range(1..hy),
            door23_y: rng.gen_range(hy + 1..h - 1),
            door02_x: rng.gen_range(1..vx),
            door13_x: rng.gen_range(vx + 1..w - 1),
            obstacle_cells: Vec::new(),
            agent_cell: 0,
            goal_cell: 0,
        };
        let layout = match GridLayout::from_manifest(&manifest) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let mut manifest = manifest;
        let mut used = Vec::new();
        let mut ok = true;
        for i in 0..cfg.n_obstacles {
            let interior = layout.interior(home_room(i));
            let free: Vec<usize> =
                interior.iter().copied().filter(|c| !used.contains(c)).collect();
            if free.is_empty() {
                ok = false;
                break;
            }
            let cell = free[rng.gen_range(0..free.len())];
            used.push(cell);
            manifest.obstacle_cells.push(cell);
        }
        if !ok {
            continue;
        }
        let free: Vec<usize> = layout.free_cells().filter(|c| !used.contains(c)).collect();
        let agent = free[rng.gen_range(0..free.len())];
        let goal_choices: Vec<usize> = free.iter().copied().filter(|&c| c != agent).collect();
        let goal = goal_choices[rng.gen_range(0..goal_choices.len())];
        manifest.agent_cell = agent;
        manifest.goal_cell = goal;
        return Ok(manifest);
    }
    Err(CampError::InvalidAssignment("could not sample a valid layout".into()))
}

/// Binds a manifest to a concrete factored MDP and task.
pub fn gridworld_bind(
    cfg: &GridworldConfig,
    manifest: &GridManifest,
    task_id: &str,
) -> Result<GridTask> {
    let layout = GridLayout::from_manifest(manifest)?;
    let mut state_vars = vec![
        VariableSpec::state_range("agent_pos", layout.max_room_len()),
        VariableSpec::state_range("agent_room", N_ROOMS),
        VariableSpec::new(
            "agent_init",
            crate::core::VarKind::State,
            vec![manifest.agent_cell as i64],
        )?,
        VariableSpec::new("goal", crate::core::VarKind::State, vec![manifest.goal_cell as i64])?,
    ];
    for i in 0..cfg.n_obstacles {
        let room = home_room(i);
        state_vars.push(VariableSpec::state_range(
            format!("obst{i}_pos"),
            layout.interior(room).len(),
        ));
        state_vars.push(VariableSpec::new(
            format!("obst{i}_room"),
            crate::core::VarKind::State,
            vec![room as i64],
        )?);
        state_vars.push(VariableSpec::state_bool(format!("obst{i}_alive")));
    }
    let mut action_vars = vec![VariableSpec::action_range("move", 4)];
    for i in 0..cfg.n_obstacles {
        action_vars.push(VariableSpec::action_range(format!("remove{i}"), 2));
    }
    let vars = Vars::new(state_vars, action_vars)?;

    let transition = GridTransitionFull {
        inner: GridTransition {
            layout: layout.clone(),
            n_obstacles: cfg.n_obstacles,
            move_prob: cfg.obstacle_move_prob,
            init_cell: manifest.agent_cell,
        },
    };

    let reward_layout = layout.clone();
    let goal_cell = manifest.goal_cell;
    let goal_reward = cfg.goal_reward;
    let agent_cell = move |s: &FactoredState| -> usize {
        reward_layout.cell_at(s.values[AGENT_ROOM] as usize, s.values[AGENT_POS] as usize)
    };
    let reward = {
        let agent_cell = agent_cell.clone();
        Arc::new(move |s: &FactoredState| {
            if agent_cell(s) == goal_cell {
                goal_reward
            } else {
                0.0
            }
        })
    };
    let terminal = {
        let agent_cell = agent_cell.clone();
        Arc::new(move |s: &FactoredState| agent_cell(s) == goal_cell)
    };

    let mdp = MdpBuilder::new(vars.clone())
        .transition(Arc::new(transition))
        .reward(reward.clone())
        .reward_vars(&["agent_pos", "agent_room", "goal"])
        .terminal(terminal)
        .horizon(cfg.horizon)
        .gamma(cfg.gamma)
        .build()?;

    // initial state
    let (ar, ao) = layout.room_of(manifest.agent_cell).ok_or_else(|| {
        CampError::InvalidAssignment("agent start is not a free cell".into())
    })?;
    let mut values = vec![0u16; OBST_BASE];
    values[AGENT_POS] = ao as u16;
    values[AGENT_ROOM] = ar as u16;
    values[AGENT_INIT] = 0; // single-value domain
    values[GOAL] = 0; // single-value domain
    for (i, &cell) in manifest.obstacle_cells.iter().enumerate() {
        let room = home_room(i);
        let off = layout
            .interior(room)
            .iter()
            .position(|&c| c == cell)
            .ok_or_else(|| CampError::InvalidAssignment("obstacle not on interior cell".into()))?;
        values.push(off as u16); // pos
        values.push(0); // room (single-value domain)
        values.push(1); // alive
    }
    let initial_state = FactoredState::new(values);
    let features = task_features(&layout, manifest);
    let task = Task::new(&vars, task_id, initial_state, reward, features)?;

    Ok(GridTask { manifest: manifest.clone(), layout, mdp, task })
}

pub fn gridworld_sample_task(
    cfg: &GridworldConfig,
    task_id: &str,
    rng: &mut ChaCha8Rng,
) -> Result<GridTask> {
    let manifest = gridworld_sample_manifest(cfg, rng)?;
    gridworld_bind(cfg, &manifest, task_id)
}

/// Task features: flattened occupancy grids, one channel each for walls,
/// initial obstacles, agent start, and goal.
fn task_features(layout: &GridLayout, m: &GridManifest) -> Vec<f64> {
    let n = layout.width * layout.height;
    let mut f = vec![0.0; 4 * n];
    for c in 0..n {
        if layout.is_wall(c) {
            f[c] = 1.0;
        }
    }
    for &c in &m.obstacle_cells {
        f[n + c] = 1.0;
    }
    f[2 * n + m.agent_cell] = 1.0;
    f[3 * n + m.goal_cell] = 1.0;
    f
}

/// State features for the policy-learning baselines: the same four channels
/// evaluated on the current state (alive obstacles only).
pub fn gridworld_state_features(grid: &GridTask, s: &FactoredState) -> Vec<f64> {
    let layout = &grid.layout;
    let n = layout.width * layout.height;
    let mut f = vec![0.0; 4 * n];
    for c in 0..n {
        if layout.is_wall(c) {
            f[c] = 1.0;
        }
    }
    let n_obstacles = grid.manifest.obstacle_cells.len();
    for i in 0..n_obstacles {
        if s.values[obst_alive(i)] == 1 {
            let room = home_room(i);
            let interior = layout.interior(room);
            let cell = interior[s.values[obst_pos(i)] as usize % interior.len()];
            f[n + cell] = 1.0;
        }
    }
    let agent = layout.cell_at(s.values[AGENT_ROOM] as usize, s.values[AGENT_POS] as usize);
    f[2 * n + agent] = 1.0;
    f[3 * n + grid.manifest.goal_cell] = 1.0;
    f
}

/// Context-space settings for this domain: single-term and disjunctive
/// constraints over the agent's room variable.
pub fn gridworld_context_config() -> ContextGenConfig {
    ContextGenConfig {
        max_len: 2,
        domain_size_threshold: 8,
        conjunctions: false,
        disjunctions: true,
        variables: Some(vec!["agent_room".into()]),
    }
}
