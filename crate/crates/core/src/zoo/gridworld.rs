use std::sync::Arc;

use super::ZooError;
use crate::family::{
    FamilyError, FieldChoice, FnBuilder, MdpFamily, Observation, ParamSpace, SamplerSpec,
    TabularMember, Theta, ThetaField,
};
use crate::mdp::{Horizon, TabularMdp};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const UP: usize = 2;
pub const DOWN: usize = 3;

/// Discount used by the bundled gridworlds.
pub const GRID_DISCOUNT: f64 = 0.99;

/// A rectangular grid. Cells are `y * width + x`; row 0 is the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Result<Self, ZooError> {
        if width == 0 || height == 0 || width * height < 2 {
            return Err(ZooError::DegenerateGrid(format!(
                "{width}x{height} grid has fewer than two cells"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell(&self, x: usize, y: usize) -> Result<usize, ZooError> {
        if x >= self.width || y >= self.height {
            return Err(ZooError::DegenerateGrid(format!(
                "cell ({x}, {y}) outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(y * self.width + x)
    }

    /// Cell after moving; blocked moves stay put. `mirrored` swaps left and right.
    pub fn moved(&self, cell: usize, action: usize, mirrored: bool) -> usize {
        let (x, y) = (cell % self.width, cell / self.width);
        let action = match (action, mirrored) {
            (LEFT, true) => RIGHT,
            (RIGHT, true) => LEFT,
            (a, _) => a,
        };
        match action {
            LEFT if x > 0 => cell - 1,
            RIGHT if x + 1 < self.width => cell + 1,
            UP if y > 0 => cell - self.width,
            DOWN if y + 1 < self.height => cell + self.width,
            _ => cell,
        }
    }

    /// Reward 1 on entering `goal`, which is absorbing with zero reward.
    pub fn mdp(&self, start: usize, goal: usize, mirrored: bool) -> Result<TabularMdp, ZooError> {
        if start == goal {
            return Err(ZooError::DegenerateGrid("start and goal coincide".into()));
        }
        let n = self.cells();
        let mut reward = vec![0.0; n * 4];
        let mut next = vec![0; n * 4];
        for c in 0..n {
            for a in 0..4 {
                if c == goal {
                    next[c * 4 + a] = goal;
                    continue;
                }
                let t = self.moved(c, a, mirrored);
                next[c * 4 + a] = t;
                if t == goal {
                    reward[c * 4 + a] = 1.0;
                }
            }
        }
        let mut s0 = vec![0.0; n];
        s0[start] = 1.0;
        Ok(TabularMdp::deterministic(
            n,
            4,
            reward,
            next,
            s0,
            GRID_DISCOUNT,
            Horizon::Unbounded,
        )?)
    }
}

/// θ records of the hidden-parameter gridworld.
pub fn hidden_param_thetas() -> Vec<Theta> {
    vec![
        Theta::seed(0).with("mirrored", ThetaField::Flag(false)),
        Theta::seed(1).with("mirrored", ThetaField::Flag(true)),
    ]
}

/// Gridworld whose members differ only in whether left and right are swapped.
/// The agent observes the cell, never θ.
pub fn make_hidden_param_gridworld(
    width: usize,
    height: usize,
    start: (usize, usize),
    goal: (usize, usize),
) -> Result<MdpFamily, ZooError> {
    let grid = Grid::new(width, height)?;
    let (s, g) = (grid.cell(start.0, start.1)?, grid.cell(goal.0, goal.1)?);
    grid.mdp(s, g, false)?;
    let members = hidden_param_thetas()
        .into_iter()
        .map(|t| {
            let mirrored = t.flag("mirrored").unwrap_or(false);
            Ok((t, TabularMember::fully_observed(grid.mdp(s, g, mirrored)?)))
        })
        .collect::<Result<Vec<_>, ZooError>>()?;
    Ok(MdpFamily::from_members(
        format!("hidden-grid-{width}x{height}"),
        members,
    )?)
}

/// Gridworld family over goal cells: θ carries a `goal` field drawn uniformly from
/// the non-start cells. With `observe_goal` the goal is shown on the goal channel.
pub fn make_goal_gridworld(
    width: usize,
    height: usize,
    start: (usize, usize),
    master_seed: u64,
    observe_goal: bool,
) -> Result<MdpFamily, ZooError> {
    let grid = Grid::new(width, height)?;
    let s = grid.cell(start.0, start.1)?;
    let choices = (0..grid.cells())
        .filter(|&c| c != s)
        .map(|c| ThetaField::Int(c as i64))
        .collect();
    let space = ParamSpace::generative(
        master_seed,
        SamplerSpec {
            fields: vec![FieldChoice {
                name: "goal".into(),
                choices,
            }],
        },
    );
    let build = move |theta: &Theta| -> Result<TabularMember, FamilyError> {
        let goal = theta
            .int("goal")
            .filter(|&g| g >= 0 && (g as usize) < grid.cells() && g as usize != s)
            .ok_or_else(|| FamilyError::InvalidTheta(format!("{theta} has no valid goal cell")))?
            as usize;
        let mdp = grid
            .mdp(s, goal, false)
            .map_err(|e| FamilyError::InvalidTheta(e.to_string()))?;
        let observations = (0..grid.cells())
            .map(|c| {
                if observe_goal {
                    Observation::with_goal(c as u64, goal as u64)
                } else {
                    Observation::state(c)
                }
            })
            .collect();
        Ok(TabularMember {
            mdp: Arc::new(mdp),
            observations: Arc::new(observations),
        })
    };
    let fam = MdpFamily::new(
        format!("goal-grid-{width}x{height}"),
        space,
        Arc::new(FnBuilder(build)),
        4,
        true,
    )?;
    Ok(fam.with_deterministic(true))
}
