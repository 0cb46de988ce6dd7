use super::{ConflictWitness, Member, ThetaActions, ThetaPath};
use crate::mdp::ActionSet;

/// Default node budget for the backtracking search.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

const NO_PARENT: usize = usize::MAX;

pub(crate) enum Outcome {
    Found(Vec<usize>, u64),
    Exhausted(ConflictWitness, u64),
    OverBudget(u64),
}

enum Undo {
    Reached(usize, usize),
    Assigned(usize),
}

struct Frame {
    state: usize,
    candidates: Vec<usize>,
    next: usize,
    mark: usize,
}

struct Search<'a> {
    members: &'a [Member],
    num_states: usize,
    num_actions: usize,
    policy: Vec<Option<usize>>,
    /// `reached[i][s]`: state `s` is reached under member `i` by the partial policy.
    reached: Vec<Vec<bool>>,
    parent: Vec<Vec<usize>>,
    reach_count: Vec<usize>,
    trail: Vec<Undo>,
    nodes: u64,
    /// Shallowest conflict so far: (depth, empty intersection?, witness).
    best: Option<(usize, bool, ConflictWitness)>,
}

impl<'a> Search<'a> {
    fn new(members: &'a [Member]) -> Self {
        let num_states = members[0].mdp.num_states();
        let num_actions = members[0].mdp.num_actions();
        let n = members.len();
        let mut search = Self {
            members,
            num_states,
            num_actions,
            policy: vec![None; num_states],
            reached: vec![vec![false; num_states]; n],
            parent: vec![vec![NO_PARENT; num_states]; n],
            reach_count: vec![0; num_states],
            trail: Vec::new(),
            nodes: 0,
            best: None,
        };
        for i in 0..n {
            for s in members[i].mdp.start_support() {
                // Nothing is assigned yet, so this cannot conflict.
                let _ = search.reach(i, s, NO_PARENT);
            }
        }
        search.trail.clear();
        search
    }

    /// Marks `s` reached under member `i` and follows assigned actions onward.
    /// Returns the state where an assigned action is not optimal for `i`.
    fn reach(&mut self, i: usize, s: usize, from: usize) -> Result<(), usize> {
        let mut stack = vec![(s, from)];
        while let Some((s, from)) = stack.pop() {
            if self.reached[i][s] {
                continue;
            }
            self.reached[i][s] = true;
            self.parent[i][s] = from;
            self.reach_count[s] += 1;
            self.trail.push(Undo::Reached(i, s));
            if let Some(a) = self.policy[s] {
                if !self.members[i].argmax[s].contains(a) {
                    return Err(s);
                }
                for &(t, _) in self.members[i].mdp.row(s, a) {
                    stack.push((t, s));
                }
            }
        }
        Ok(())
    }

    fn assign(&mut self, s: usize, a: usize) -> Result<(), usize> {
        self.policy[s] = Some(a);
        self.trail.push(Undo::Assigned(s));
        for i in 0..self.members.len() {
            if !self.reached[i][s] {
                continue;
            }
            for &(t, _) in self.members[i].mdp.row(s, a) {
                self.reach(i, t, s)?;
            }
        }
        Ok(())
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Reached(i, s) => {
                    self.reached[i][s] = false;
                    self.parent[i][s] = NO_PARENT;
                    self.reach_count[s] -= 1;
                }
                Undo::Assigned(s) => self.policy[s] = None,
            }
        }
    }

    fn candidates(&self, s: usize) -> ActionSet {
        let mut set = ActionSet::full(self.num_actions);
        for (i, m) in self.members.iter().enumerate() {
            if self.reached[i][s] {
                set.intersect_with(&m.argmax[s]);
            }
        }
        set
    }

    /// Next open state to branch on, or the first open state with no candidates.
    fn select(&self) -> Option<Result<(usize, ActionSet), usize>> {
        let mut best: Option<(usize, ActionSet)> = None;
        for s in 0..self.num_states {
            if self.reach_count[s] == 0 || self.policy[s].is_some() {
                continue;
            }
            let c = self.candidates(s);
            if c.is_empty() {
                return Some(Err(s));
            }
            let better = match &best {
                None => true,
                Some((b, bc)) => {
                    let key = |x: usize, set: &ActionSet| {
                        (set.len() != 1, std::cmp::Reverse(self.reach_count[x]))
                    };
                    key(s, &c) < key(*b, bc)
                }
            };
            if better {
                best = Some((s, c));
            }
        }
        best.map(Ok)
    }

    fn path(&self, i: usize, s: usize) -> Vec<usize> {
        let mut states = vec![s];
        let mut cur = s;
        while self.parent[i][cur] != NO_PARENT {
            cur = self.parent[i][cur];
            states.push(cur);
        }
        states.reverse();
        states
    }

    fn record(&mut self, s: usize, depth: usize) {
        let empty = self.candidates(s).is_empty();
        let improves = match &self.best {
            None => true,
            Some((d, e, _)) => (depth, !empty) < (*d, !*e),
        };
        if !improves {
            return;
        }
        let mut per_theta_argmax = Vec::new();
        let mut reachability_evidence = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            if self.reached[i][s] {
                per_theta_argmax.push(ThetaActions {
                    theta: m.theta.clone(),
                    actions: m.argmax[s].to_vec(),
                });
                reachability_evidence.push(ThetaPath {
                    theta: m.theta.clone(),
                    states: self.path(i, s),
                });
            }
        }
        self.best = Some((
            depth,
            empty,
            ConflictWitness {
                state: s,
                per_theta_argmax,
                reachability_evidence,
            },
        ));
    }

    fn finish(&self) -> Vec<usize> {
        (0..self.num_states)
            .map(|s| {
                self.policy[s].unwrap_or_else(|| {
                    let mut all = ActionSet::full(self.num_actions);
                    for m in self.members {
                        all.intersect_with(&m.argmax[s]);
                    }
                    all.first().unwrap_or(0)
                })
            })
            .collect()
    }
}

pub(crate) fn run(members: &[Member], budget: u64) -> Outcome {
    let mut search = Search::new(members);
    let mut stack: Vec<Frame> = Vec::new();
    loop {
        match search.select() {
            None => return Outcome::Found(search.finish(), search.nodes),
            Some(Err(s)) => search.record(s, stack.len()),
            Some(Ok((s, c))) => stack.push(Frame {
                state: s,
                candidates: c.to_vec(),
                next: 0,
                mark: search.trail.len(),
            }),
        }
        // Take the next untried branch, backtracking as needed.
        loop {
            let Some(frame) = stack.last_mut() else {
                let nodes = search.nodes;
                return match search.best.take() {
                    Some((_, _, witness)) => Outcome::Exhausted(witness, nodes),
                    None => unreachable!("search exhausted without recording a conflict"),
                };
            };
            let (s, mark) = (frame.state, frame.mark);
            if frame.next == frame.candidates.len() {
                stack.pop();
                search.undo_to(mark);
                continue;
            }
            let a = frame.candidates[frame.next];
            frame.next += 1;
            search.undo_to(mark);
            if search.nodes >= budget {
                return Outcome::OverBudget(search.nodes);
            }
            search.nodes += 1;
            match search.assign(s, a) {
                Ok(()) => break,
                Err(bad) => {
                    let depth = stack.len();
                    search.record(bad, depth);
                }
            }
        }
    }
}
