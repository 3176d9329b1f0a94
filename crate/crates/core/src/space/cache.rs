//! Versioned binary container for expanded transition systems.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "GPLN.TS\0" | version u8
//! atom table: count u32, then per atom: predicate name (u16 len + utf8),
//!             arity u8, object names (u16 len + utf8 each)
//! init state id u32
//! states: count u32, bitset width u32 (bytes per state), then per state the
//!         goal flag u8, distance u32 (0xFFFF_FFFF = dead end), bitset
//! adjacency: per state: edge count u32, then (action id u32, state id u32)
//! ```

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::pddl::{GroundedProblem, State};

use super::{SpaceError, StateId, TransitionSystem};

const MAGIC: &[u8; 8] = b"GPLN.TS\0";
const VERSION: u8 = 1;
const DEAD_END: u32 = u32::MAX;

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u16(out, s.len() as u16);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SpaceError> {
        if self.pos + n > self.buf.len() {
            return Err(SpaceError::Cache("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SpaceError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, SpaceError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, SpaceError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, SpaceError> {
        let len = self.u16()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| SpaceError::Cache("invalid utf-8".into()))
    }
}

/// Writes the transition system to a cache file.
pub fn write_cache(path: &Path, ts: &TransitionSystem) -> Result<(), SpaceError> {
    let problem = &ts.problem;
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);

    put_u32(&mut out, problem.atoms.len() as u32);
    for atom in &problem.atoms {
        put_str(&mut out, &problem.domain.predicate(atom.predicate).name);
        out.push(atom.args.len() as u8);
        for &arg in &atom.args {
            put_str(&mut out, &problem.objects[arg.0 as usize].0);
        }
    }

    put_u32(&mut out, ts.init.0);
    put_u32(&mut out, ts.states.len() as u32);
    let width = problem.atoms.len().div_ceil(8);
    put_u32(&mut out, width as u32);
    for (i, state) in ts.states.iter().enumerate() {
        out.push(ts.goal_flags[i] as u8);
        put_u32(&mut out, ts.goal_distance[i].unwrap_or(DEAD_END));
        let mut bits = vec![0u8; width];
        for &a in state {
            bits[(a / 8) as usize] |= 1 << (a % 8);
        }
        out.extend_from_slice(&bits);
    }
    for edges in &ts.successors {
        put_u32(&mut out, edges.len() as u32);
        for &(action, target) in edges {
            put_u32(&mut out, action);
            put_u32(&mut out, target.0);
        }
    }

    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Reads a cache file back against the same grounded problem. The cached atom
/// table must match the problem's table exactly.
pub fn read_cache(path: &Path, problem: &Arc<GroundedProblem>) -> Result<TransitionSystem, SpaceError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut r = Reader { buf: &buf, pos: 0 };

    if r.take(8)? != MAGIC {
        return Err(SpaceError::Cache("bad magic".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(SpaceError::Cache(format!("unsupported version {version}")));
    }

    let atom_count = r.u32()? as usize;
    if atom_count != problem.atoms.len() {
        return Err(SpaceError::Cache(format!(
            "atom table size mismatch: cached {atom_count}, problem has {}",
            problem.atoms.len()
        )));
    }
    for atom in &problem.atoms {
        let pred = r.str()?;
        let arity = r.u8()? as usize;
        if pred != problem.domain.predicate(atom.predicate).name || arity != atom.args.len() {
            return Err(SpaceError::Cache("atom table mismatch".into()));
        }
        for &arg in &atom.args {
            let name = r.str()?;
            if name != problem.objects[arg.0 as usize].0 {
                return Err(SpaceError::Cache("atom table mismatch".into()));
            }
        }
    }

    let init = StateId(r.u32()?);
    let state_count = r.u32()? as usize;
    let width = r.u32()? as usize;
    let mut states: Vec<State> = Vec::with_capacity(state_count);
    let mut goal_flags = Vec::with_capacity(state_count);
    let mut goal_distance = Vec::with_capacity(state_count);
    for _ in 0..state_count {
        goal_flags.push(r.u8()? != 0);
        let d = r.u32()?;
        goal_distance.push(if d == DEAD_END { None } else { Some(d) });
        let bits = r.take(width)?;
        let mut state: State = Vec::new();
        for (byte_idx, &byte) in bits.iter().enumerate() {
            let mut b = byte;
            while b != 0 {
                let bit = b.trailing_zeros();
                state.push((byte_idx * 8) as u32 + bit);
                b &= b - 1;
            }
        }
        states.push(state);
    }
    let mut successors = Vec::with_capacity(state_count);
    for _ in 0..state_count {
        let n = r.u32()? as usize;
        let mut edges = Vec::with_capacity(n);
        for _ in 0..n {
            let action = r.u32()?;
            let target = r.u32()?;
            if target as usize >= state_count {
                return Err(SpaceError::Cache("edge target out of range".into()));
            }
            edges.push((action, StateId(target)));
        }
        successors.push(edges);
    }
    if r.pos != buf.len() {
        return Err(SpaceError::Cache("trailing bytes".into()));
    }

    Ok(TransitionSystem {
        problem: Arc::clone(problem),
        states,
        successors,
        init,
        goal_flags,
        goal_distance,
    })
}
