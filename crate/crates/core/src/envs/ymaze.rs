use rand::Rng;

use super::point::POINT_GAIN;
use super::{check_continuous_action, EnvSpec, GoalEnv, Observation, RewardSpec, StepOutcome};
use crate::error::{check_dim, Result};
use crate::SimRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

fn on_segment(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
    q[0] >= p[0].min(r[0]) && q[0] <= p[0].max(r[0]) && q[1] >= p[1].min(r[1]) && q[1] <= p[1].max(r[1])
}

/// Closed-segment intersection (touching counts).
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(t.a, s.a, t.b))
        || (d2 == 0.0 && on_segment(t.a, s.b, t.b))
        || (d3 == 0.0 && on_segment(s.a, t.a, s.b))
        || (d4 == 0.0 && on_segment(s.a, t.b, s.b))
}

/// Start and goal regions of the maze.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    LowerLeft,
    LowerRight,
    UpperLeft,
    UpperRight,
}

impl Arm {
    pub const STARTS: [Arm; 2] = [Arm::LowerLeft, Arm::LowerRight];
    pub const GOALS: [Arm; 2] = [Arm::UpperLeft, Arm::UpperRight];

    /// `(x_lo, x_hi, y_lo, y_hi)`
    pub fn bounds(self) -> (f64, f64, f64, f64) {
        match self {
            Arm::LowerLeft => (-0.9, -0.4, -0.9, -0.4),
            Arm::LowerRight => (0.4, 0.9, -0.9, -0.4),
            Arm::UpperLeft => (-0.9, -0.4, 0.4, 0.9),
            Arm::UpperRight => (0.4, 0.9, 0.4, 0.9),
        }
    }

    pub fn sample(self, rng: &mut SimRng) -> [f64; 2] {
        let (x0, x1, y0, y1) = self.bounds();
        [rng.random_range(x0..=x1), rng.random_range(y0..=y1)]
    }

    pub fn contains(self, p: &[f64]) -> bool {
        let (x0, x1, y0, y1) = self.bounds();
        p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1
    }

    pub fn is_left(self) -> bool {
        matches!(self, Arm::LowerLeft | Arm::UpperLeft)
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::LowerLeft => "lower_left",
            Arm::LowerRight => "lower_right",
            Arm::UpperLeft => "upper_left",
            Arm::UpperRight => "upper_right",
        }
    }

    pub fn locate(p: &[f64]) -> Option<Arm> {
        [Arm::LowerLeft, Arm::LowerRight, Arm::UpperLeft, Arm::UpperRight]
            .into_iter()
            .find(|a| a.contains(p))
    }
}

/// Half width of the hub gap centred at the origin.
pub const HUB_HALF_WIDTH: f64 = 0.1;

/// Point mass in `[-1, 1]^2` split by two walls along `y = 0` that leave a
/// single gap at the origin: the lower arms merge at the hub and fork again
/// above it. Moves that would touch a wall are blocked.
#[derive(Clone, Debug)]
pub struct PointYMaze {
    spec: EnvSpec,
    reward: RewardSpec,
    walls: Vec<Segment>,
    pos: [f64; 2],
    goal: [f64; 2],
    t: usize,
}

impl Default for PointYMaze {
    fn default() -> Self {
        Self::new()
    }
}

impl PointYMaze {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                id: "point-ymaze".into(),
                state_dim: 2,
                action_dim: 2,
                goal_dim: 2,
                horizon: 80,
                threshold: 0.1,
                action_bound: 1.0,
                discrete: false,
                start_distribution: "uniform{lower_left,lower_right} arm boxes".into(),
                goal_distribution: "uniform{upper_left,upper_right} arm boxes".into(),
            },
            reward: RewardSpec::default(),
            walls: vec![
                Segment {
                    a: [-1.0, 0.0],
                    b: [-HUB_HALF_WIDTH, 0.0],
                },
                Segment {
                    a: [HUB_HALF_WIDTH, 0.0],
                    b: [1.0, 0.0],
                },
            ],
            pos: [0.0; 2],
            goal: [0.0; 2],
            t: 0,
        }
    }

    fn observation(&self) -> Observation {
        Observation {
            state: self.pos.to_vec(),
            achieved: self.pos.to_vec(),
            desired: self.goal.to_vec(),
        }
    }

    pub fn blocked(&self, from: [f64; 2], to: [f64; 2]) -> bool {
        let mv = Segment { a: from, b: to };
        self.walls.iter().any(|w| segments_intersect(&mv, w))
    }
}

impl GoalEnv for PointYMaze {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reward_spec(&self) -> RewardSpec {
        self.reward
    }

    fn set_reward_spec(&mut self, reward: RewardSpec) {
        self.reward = reward;
    }

    fn reset(&mut self, rng: &mut SimRng) -> Observation {
        let start = Arm::STARTS[rng.random_range(0..2)];
        let goal = Arm::GOALS[rng.random_range(0..2)];
        self.pos = start.sample(rng);
        self.goal = goal.sample(rng);
        self.t = 0;
        self.observation()
    }

    fn reset_to(&mut self, state: &[f64], goal: &[f64]) -> Result<Observation> {
        check_dim("ymaze state", 2, state.len())?;
        check_dim("ymaze goal", 2, goal.len())?;
        self.pos = [state[0].clamp(-1.0, 1.0), state[1].clamp(-1.0, 1.0)];
        self.goal = [goal[0], goal[1]];
        self.t = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        check_continuous_action(&self.spec, action)?;
        let before = self.pos;
        let proposed = [
            (self.pos[0] + POINT_GAIN * action[0]).clamp(-1.0, 1.0),
            (self.pos[1] + POINT_GAIN * action[1]).clamp(-1.0, 1.0),
        ];
        if !self.blocked(before, proposed) {
            self.pos = proposed;
        }
        self.t += 1;
        let source = if self.reward.evaluate_current_state {
            before
        } else {
            self.pos
        };
        let reward = self.reward.reward(&source, &self.goal, self.spec.threshold);
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            terminal: self.t >= self.spec.horizon,
        })
    }

    fn phi(&self, state: &[f64]) -> Vec<f64> {
        state[..2].to_vec()
    }

    fn box_clone(&self) -> Box<dyn GoalEnv> {
        Box::new(self.clone())
    }

    fn walls(&self) -> &[Segment] {
        &self.walls
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn intersection_basics() {
        let w = Segment {
            a: [0.0, 0.0],
            b: [1.0, 0.0],
        };
        assert!(segments_intersect(
            &Segment {
                a: [0.5, -0.1],
                b: [0.5, 0.1]
            },
            &w
        ));
        assert!(segments_intersect(
            &Segment {
                a: [0.5, -0.1],
                b: [0.5, 0.0]
            },
            &w
        ));
        assert!(!segments_intersect(
            &Segment {
                a: [1.5, -0.1],
                b: [1.5, 0.1]
            },
            &w
        ));
        assert!(!segments_intersect(
            &Segment {
                a: [0.2, 0.1],
                b: [0.8, 0.1]
            },
            &w
        ));
    }

    #[test]
    fn wall_blocks_and_gap_passes() {
        let mut env = PointYMaze::new();
        env.reset_to(&[-0.5, -0.05], &[0.0, 0.5]).unwrap();
        let o = env.step(&[0.0, 1.0]).unwrap();
        assert_eq!(o.observation.state, vec![-0.5, -0.05]);
        env.reset_to(&[0.0, -0.05], &[0.0, 0.5]).unwrap();
        let o = env.step(&[0.0, 1.0]).unwrap();
        assert!((o.observation.state[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn phi_is_position() {
        assert_eq!(PointYMaze::new().phi(&[0.3, -0.2]), vec![0.3, -0.2]);
    }

    proptest! {
        #[test]
        fn no_transition_crosses_a_wall(
            x in -1.0f64..1.0, y in -1.0f64..1.0,
            actions in proptest::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0), 1..60),
        ) {
            let mut env = PointYMaze::new();
            prop_assume!(y.abs() > 1e-9);
            env.reset_to(&[x, y], &[0.0, 0.5]).unwrap();
            let mut s = [x, y];
            for (ax, ay) in actions {
                let o = env.step(&[ax, ay]).unwrap();
                let s2 = [o.observation.state[0], o.observation.state[1]];
                let mv = Segment { a: s, b: s2 };
                if s != s2 {
                    for wall in env.walls() {
                        prop_assert!(!segments_intersect(&mv, wall));
                    }
                }
                prop_assert_eq!(o.observation.achieved.clone(), env.phi(&o.observation.state));
                s = s2;
            }
        }
    }
}
