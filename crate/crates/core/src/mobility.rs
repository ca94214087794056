//! Random-direction mobility with reflection at the terrain boundary.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{NodeState, SimConfig, Terrain, Vec2};
use crate::rng::{self, Concern};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub speed_min: f64,
    pub speed_max: f64,
    /// Ticks each host keeps its heading before redrawing.
    pub direction_hold: u32,
    pub terrain: Terrain,
    /// Seconds per tick; velocities are in m/s.
    pub tick_seconds: f64,
}

impl MobilityParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        MobilityParams {
            speed_min: cfg.speed_min,
            speed_max: cfg.speed_max,
            direction_hold: cfg.direction_hold(),
            terrain: cfg.terrain,
            tick_seconds: cfg.tick_seconds,
        }
    }
}

/// Folds a coordinate back into `[0, max]`, flipping the velocity component
/// once per wall contact.
fn reflect(mut x: f64, mut v: f64, max: f64) -> (f64, f64) {
    loop {
        if x < 0.0 {
            x = -x;
            v = -v;
        } else if x > max {
            x = 2.0 * max - x;
            v = -v;
        } else {
            return (x, v);
        }
    }
}

fn draw_velocity(rng: &mut ChaCha8Rng, params: &MobilityParams) -> Vec2 {
    let speed = rng.random_range(params.speed_min..=params.speed_max);
    let heading = rng.random_range(0.0..std::f64::consts::TAU);
    Vec2::new(speed * heading.cos(), speed * heading.sin())
}

/// Advances every live node by `vel * dt` with boundary reflection. Dead
/// nodes stay where they died.
pub fn advance(nodes: &mut [NodeState], params: &MobilityParams, dt: u64) {
    let t = dt as f64 * params.tick_seconds;
    for node in nodes.iter_mut().filter(|n| n.is_alive()) {
        let raw = node.pos + node.vel * t;
        let (x, vx) = reflect(raw.x, node.vel.x, params.terrain.width);
        let (y, vy) = reflect(raw.y, node.vel.y, params.terrain.height);
        node.pos = Vec2::new(x, y);
        node.vel = Vec2::new(vx, vy);
    }
}

/// Per-run mobility state: one random stream per host plus the elapsed
/// tick count that drives heading redraws.
#[derive(Debug, Clone)]
pub struct Mobility {
    params: MobilityParams,
    streams: Vec<ChaCha8Rng>,
    elapsed: u64,
}

impl Mobility {
    pub fn new(params: MobilityParams, seed: u64, hosts: usize) -> Self {
        let streams = (0..hosts)
            .map(|i| rng::stream(seed, Concern::Mobility, i as u32))
            .collect();
        Mobility {
            params,
            streams,
            elapsed: 0,
        }
    }

    pub fn params(&self) -> &MobilityParams {
        &self.params
    }

    /// Draws the initial velocity of every host.
    pub fn initialize(&mut self, nodes: &mut [NodeState]) {
        self.redraw(nodes);
    }

    fn redraw(&mut self, nodes: &mut [NodeState]) {
        for node in nodes.iter_mut() {
            let rng = &mut self.streams[node.host.index()];
            let vel = draw_velocity(rng, &self.params);
            if node.is_alive() {
                node.vel = vel;
            }
        }
    }

    /// Moves nodes for `dt` ticks, then redraws headings if a hold boundary
    /// was crossed.
    pub fn step(&mut self, nodes: &mut [NodeState], dt: u64) {
        advance(nodes, &self.params, dt);
        let hold = u64::from(self.params.direction_hold);
        let before = self.elapsed / hold;
        self.elapsed += dt;
        if self.elapsed / hold != before {
            self.redraw(nodes);
        }
    }
}
