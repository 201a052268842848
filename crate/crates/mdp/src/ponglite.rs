//! Pong-lite: a 16×16 grid Pong for two players.
//!
//! Columns 0 and 15 are behind the paddles, paddles live in columns 1 and 14.
//! Row 0 is the top. The training agent plays the left paddle.

use lmrk_core::{Action, Rng};
use rand::Rng as _;

use crate::env::{ActionSpace, Environment, MdpSpec, Role, RoleSpec, Tick};

pub const WIDTH: i32 = 16;
pub const HEIGHT: i32 = 16;
pub const PADDLE_HALF: i32 = 1;
pub const LEFT_COL: i32 = 1;
pub const RIGHT_COL: i32 = WIDTH - 2;
pub const WINNING_SCORE: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up,
    Stay,
    Down,
}

impl Move {
    pub const ALL: [Move; 3] = [Move::Up, Move::Stay, Move::Down];

    pub fn from_index(i: usize) -> Option<Move> {
        Move::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        match self {
            Move::Up => 0,
            Move::Stay => 1,
            Move::Down => 2,
        }
    }

    fn delta(self) -> i32 {
        match self {
            Move::Up => -1,
            Move::Stay => 0,
            Move::Down => 1,
        }
    }
}

impl From<Move> for Action {
    fn from(m: Move) -> Action {
        Action::Discrete(m.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PongState {
    pub ball_x: i32,
    pub ball_y: i32,
    pub dx: i32,
    pub dy: i32,
    pub left_y: i32,
    pub right_y: i32,
    pub score_left: u32,
    pub score_right: u32,
    /// Drives serve positions so that stepping stays a pure function.
    pub serve_state: u64,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PongState {
    pub fn new(serve_seed: u64) -> Self {
        let mut s = PongState {
            ball_x: 0,
            ball_y: 0,
            dx: 1,
            dy: 1,
            left_y: HEIGHT / 2,
            right_y: HEIGHT / 2,
            score_left: 0,
            score_right: 0,
            serve_state: serve_seed,
        };
        s.serve();
        s
    }

    /// Put the ball back in the center with a pseudo-random direction and row.
    fn serve(&mut self) {
        let r = splitmix(&mut self.serve_state);
        self.dx = if r & 1 == 0 { -1 } else { 1 };
        self.dy = if r & 2 == 0 { -1 } else { 1 };
        self.ball_x = if self.dx < 0 { WIDTH / 2 - 1 } else { WIDTH / 2 };
        self.ball_y = 4 + ((r >> 8) % (HEIGHT as u64 - 8)) as i32;
    }

    pub fn is_over(&self) -> bool {
        self.score_left >= WINNING_SCORE || self.score_right >= WINNING_SCORE
    }

    /// Observation for one side, every component in [0, 1].
    pub fn observation(&self, left_side: bool) -> Vec<f64> {
        let (own, opp) = if left_side {
            (self.left_y, self.right_y)
        } else {
            (self.right_y, self.left_y)
        };
        let span = (HEIGHT - 1) as f64;
        vec![
            self.ball_x as f64 / (WIDTH - 1) as f64,
            self.ball_y as f64 / span,
            (self.dx + 1) as f64 / 2.0,
            (self.dy + 1) as f64 / 2.0,
            own as f64 / span,
            opp as f64 / span,
        ]
    }
}

fn covers(paddle_y: i32, y: i32) -> bool {
    (paddle_y - y).abs() <= PADDLE_HALF
}

/// Advance one tick: paddles move first, then the ball.
pub fn ponglite_step(state: PongState, left: Move, right: Move) -> PongState {
    let mut s = state;
    if s.is_over() {
        return s;
    }
    let clamp = |y: i32| y.clamp(PADDLE_HALF, HEIGHT - 1 - PADDLE_HALF);
    s.left_y = clamp(s.left_y + left.delta());
    s.right_y = clamp(s.right_y + right.delta());

    let mut ny = s.ball_y + s.dy;
    if !(0..HEIGHT).contains(&ny) {
        s.dy = -s.dy;
        ny = s.ball_y + s.dy;
    }
    let mut nx = s.ball_x + s.dx;
    if s.dx < 0 && nx == LEFT_COL && covers(s.left_y, ny) {
        s.dx = 1;
        nx = LEFT_COL + 1;
    } else if s.dx > 0 && nx == RIGHT_COL && covers(s.right_y, ny) {
        s.dx = -1;
        nx = RIGHT_COL - 1;
    }
    s.ball_x = nx;
    s.ball_y = ny;
    if nx <= 0 {
        s.score_right += 1;
        s.serve();
    } else if nx >= WIDTH - 1 {
        s.score_left += 1;
        s.serve();
    }
    s
}

/// Track the ball with probability 1 − ε, otherwise a uniformly random move.
/// Returns the move and whether the random branch fired.
pub fn scripted_sparring_policy(observation: &[f64], epsilon: f64, rng: &mut Rng) -> (Move, bool) {
    if rng.random::<f64>() < epsilon {
        return (Move::ALL[rng.random_range(0..3)], true);
    }
    let span = (HEIGHT - 1) as f64;
    let ball = (observation[1] * span).round() as i32;
    let own = (observation[4] * span).round() as i32;
    let m = match ball.cmp(&own) {
        std::cmp::Ordering::Less => Move::Up,
        std::cmp::Ordering::Equal => Move::Stay,
        std::cmp::Ordering::Greater => Move::Down,
    };
    (m, false)
}

/// The ε-greedy ball tracker with its own seeded generator.
#[derive(Debug, Clone)]
pub struct ScriptedSparring {
    pub epsilon: f64,
    rng: Rng,
    random_moves: u64,
    decisions: u64,
}

impl ScriptedSparring {
    pub const EPSILON: f64 = 0.2;

    pub fn new(epsilon: f64, rng: Rng) -> Self {
        ScriptedSparring {
            epsilon,
            rng,
            random_moves: 0,
            decisions: 0,
        }
    }

    pub fn decide(&mut self, observation: &[f64]) -> Move {
        let (m, random) = scripted_sparring_policy(observation, self.epsilon, &mut self.rng);
        self.decisions += 1;
        self.random_moves += random as u64;
        m
    }

    pub fn random_fraction(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.random_moves as f64 / self.decisions as f64
        }
    }
}

pub struct PongLite {
    spec: MdpSpec,
    state: PongState,
    horizon: usize,
}

impl PongLite {
    pub const HORIZON: usize = 1000;

    pub fn new(horizon: usize) -> Self {
        let role = |role, reward_dim| RoleSpec {
            role,
            observation_dim: 6,
            action_space: ActionSpace::Discrete(3),
            reward_dim,
        };
        PongLite {
            spec: MdpSpec {
                roles: vec![role(Role::Training, 1), role(Role::Sparring, 0)],
            },
            state: PongState::new(0),
            horizon,
        }
    }

    pub fn state(&self) -> PongState {
        self.state
    }
}

fn as_move(a: &Action) -> Move {
    match a {
        Action::Discrete(i) => Move::from_index(*i).unwrap_or(Move::Stay),
        Action::Continuous(_) => Move::Stay,
    }
}

impl Environment for PongLite {
    fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) {
        self.state = PongState::new(rng.random());
    }

    fn observation(&self, role: usize) -> Vec<f64> {
        self.state.observation(role == 0)
    }

    fn default_action(&self, _role: usize) -> Action {
        Move::Stay.into()
    }

    fn tick(&mut self, actions: &[Action]) -> Tick {
        let before = self.state;
        self.state = ponglite_step(before, as_move(&actions[0]), as_move(&actions[1]));
        let r = (self.state.score_left - before.score_left) as f64 - (self.state.score_right - before.score_right) as f64;
        Tick {
            rewards: vec![vec![r], vec![]],
            done: self.state.is_over(),
        }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }
}
