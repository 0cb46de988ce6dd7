use std::collections::{HashMap, VecDeque};

use super::WrapperError;
use crate::family::{EmpiricalSample, MdpFamily, TabularMember};
use crate::mdp::{Horizon, TabularMdp};

/// Default cap on the number of lifted states.
pub const DEFAULT_HISTORY_CAP: usize = 100_000;

/// Padding symbol for windows that reach back past the episode start.
pub const BLANK: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryOptions {
    pub k: usize,
    pub include_actions: bool,
    pub cap: usize,
}

/// A window of the last `k` states, interleaved with the `k − 1` actions between
/// them when actions are included: `[s_{t−k+1}, a_{t−k+1}, …, a_{t−1}, s_t]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryStateIndex {
    pub symbols: Vec<u32>,
}

impl HistoryStateIndex {
    fn start(s: usize, opts: &HistoryOptions) -> Self {
        let len = if opts.include_actions {
            2 * opts.k - 1
        } else {
            opts.k
        };
        let mut symbols = vec![BLANK; len];
        symbols[len - 1] = s as u32;
        Self { symbols }
    }

    /// Current underlying state.
    pub fn current(&self) -> usize {
        *self.symbols.last().unwrap() as usize
    }

    fn push(&self, a: usize, next: usize, include_actions: bool) -> Self {
        let mut symbols = self.symbols.clone();
        if include_actions && symbols.len() > 1 {
            symbols.drain(..2);
            symbols.push(a as u32);
        } else {
            symbols.remove(0);
        }
        symbols.push(next as u32);
        Self { symbols }
    }
}

/// Lifts each member to windows of recent history.
///
/// The lifted state space is the closure of all members' start windows under
/// every member's dynamics, so all outputs share one index. With a finite
/// horizon `H`, windows first seen after `H` steps are not expanded and become
/// zero-reward self-loops. Members must be fully observed.
pub fn history_wrapper(
    family: &MdpFamily,
    sample: &EmpiricalSample,
    opts: &HistoryOptions,
) -> Result<MdpFamily, WrapperError> {
    if opts.k == 0 {
        return Err(WrapperError::EmptyWindow);
    }
    let members = family.check_shared(&sample.thetas)?;
    let Some(first) = members.first() else {
        return Ok(MdpFamily::from_members(
            format!("{}+history", family.name()),
            vec![],
        )?);
    };
    let (ns, na) = (first.mdp.num_states(), first.mdp.num_actions());
    let depth_limit = match first.mdp.horizon() {
        Horizon::Finite(h) => Some(h),
        Horizon::Unbounded => None,
    };

    let seeds: Vec<usize> = if opts.k == 1 {
        (0..ns).collect()
    } else {
        let mut s: Vec<usize> = members.iter().flat_map(|m| m.mdp.start_support()).collect();
        s.sort_unstable();
        s.dedup();
        s
    };

    let mut index: HashMap<HistoryStateIndex, usize> = HashMap::new();
    let mut windows: Vec<HistoryStateIndex> = Vec::new();
    let mut expanded: Vec<bool> = Vec::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        let w = HistoryStateIndex::start(s, opts);
        index.insert(w.clone(), windows.len());
        windows.push(w);
        queue.push_back((windows.len() - 1, 0usize));
    }
    expanded.resize(windows.len(), false);
    while let Some((id, depth)) = queue.pop_front() {
        if depth_limit.is_some_and(|h| depth >= h) {
            continue;
        }
        expanded[id] = true;
        let s = windows[id].current();
        for a in 0..na {
            for m in &members {
                for &(t, _) in m.mdp.row(s, a) {
                    let w = windows[id].push(a, t, opts.include_actions);
                    if !index.contains_key(&w) {
                        if windows.len() >= opts.cap {
                            return Err(WrapperError::CapExceeded {
                                size: windows.len() + 1,
                                cap: opts.cap,
                            });
                        }
                        index.insert(w.clone(), windows.len());
                        windows.push(w);
                        expanded.push(false);
                        queue.push_back((windows.len() - 1, depth + 1));
                    }
                }
            }
        }
    }

    let total = windows.len();
    let mut out = Vec::with_capacity(members.len());
    for (theta, m) in sample.thetas.iter().zip(&members) {
        let mut reward = vec![0.0; total * na];
        let mut rows = vec![Vec::new(); total * na];
        let mut start = vec![0.0; total];
        for (id, w) in windows.iter().enumerate() {
            let s = w.current();
            if w.symbols[..w.symbols.len() - 1].iter().all(|&x| x == BLANK) {
                start[id] = m.mdp.start_dist()[s];
            }
            for a in 0..na {
                let i = id * na + a;
                if !expanded[id] {
                    rows[i] = vec![(id, 1.0)];
                    continue;
                }
                reward[i] = m.mdp.reward(s, a);
                rows[i] = m
                    .mdp
                    .row(s, a)
                    .iter()
                    .map(|&(t, p)| (index[&w.push(a, t, opts.include_actions)], p))
                    .collect();
            }
        }
        let mdp = TabularMdp::new(
            total,
            na,
            reward,
            rows,
            start,
            m.mdp.discount(),
            m.mdp.horizon(),
        )?;
        out.push((theta.clone(), TabularMember::fully_observed(mdp)));
    }
    Ok(MdpFamily::from_members(
        format!("{}+history{}", family.name(), opts.k),
        out,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Theta;

    fn chain_family(h: Horizon) -> (MdpFamily, EmpiricalSample) {
        let mdp = TabularMdp::deterministic(
            3,
            2,
            vec![0.0, 1.0, 0.5, 0.0, 0.0, 0.0],
            vec![1, 2, 2, 0, 2, 2],
            vec![1.0, 0.0, 0.0],
            if h == Horizon::Unbounded { 0.9 } else { 1.0 },
            h,
        )
        .unwrap();
        let t = Theta::seed(0);
        let fam = MdpFamily::from_members(
            "chain",
            vec![(t.clone(), TabularMember::fully_observed(mdp))],
        )
        .unwrap();
        (fam, EmpiricalSample::new(vec![t], 0, "all"))
    }

    #[test]
    fn window_one_is_identity() {
        let (fam, s) = chain_family(Horizon::Unbounded);
        let opts = HistoryOptions {
            k: 1,
            include_actions: true,
            cap: 100,
        };
        let lifted = history_wrapper(&fam, &s, &opts).unwrap();
        assert_eq!(
            *lifted.member(&s.thetas[0]).unwrap().mdp,
            *fam.member(&s.thetas[0]).unwrap().mdp
        );
    }

    #[test]
    fn long_windows_count_histories() {
        // Horizon 2 from state 0: histories of length 0, 1 (2 actions), 2 (4 action pairs).
        let (fam, s) = chain_family(Horizon::Finite(2));
        let opts = HistoryOptions {
            k: 4,
            include_actions: true,
            cap: 100,
        };
        let lifted = history_wrapper(&fam, &s, &opts).unwrap();
        assert_eq!(
            lifted.member(&s.thetas[0]).unwrap().mdp.num_states(),
            1 + 2 + 4
        );
    }

    #[test]
    fn cap_is_enforced() {
        let (fam, s) = chain_family(Horizon::Unbounded);
        let opts = HistoryOptions {
            k: 6,
            include_actions: true,
            cap: 5,
        };
        assert!(matches!(
            history_wrapper(&fam, &s, &opts),
            Err(WrapperError::CapExceeded { .. })
        ));
    }
}
