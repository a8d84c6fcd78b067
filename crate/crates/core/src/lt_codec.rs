//! LT encoder and iterative peeling decoder over byte-vector symbols.
//!
//! Each output symbol draws a degree `d` from the distribution, picks a
//! uniform `d`-subset of the inputs without replacement and XORs them.
//! Randomness is reproducible: symbol `i` of an encoding with seed `s` uses
//! ChaCha8 keyed by `s` on stream `i`, so symbols can be generated in any
//! order or in parallel with identical results.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degree_dist::DegreeDistribution;
use crate::error::{Error, Result};

/// One output symbol: the sorted input indices it covers and the XOR of
/// those inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSymbol {
    pub neighbors: Vec<u32>,
    pub payload: Vec<u8>,
}

impl CodedSymbol {
    /// Builds a symbol, sorting the neighbor list and rejecting empty or
    /// repeated neighbor sets.
    pub fn new(mut neighbors: Vec<u32>, payload: Vec<u8>) -> Result<Self> {
        neighbors.sort_unstable();
        if neighbors.is_empty() {
            return Err(Error::InvalidInput("coded symbol has no neighbors".into()));
        }
        if neighbors.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("repeated neighbor in {neighbors:?}")));
        }
        Ok(CodedSymbol { neighbors, payload })
    }

    /// XOR of `inputs` over `neighbors`.
    pub fn from_inputs(neighbors: Vec<u32>, inputs: &[Vec<u8>]) -> Result<Self> {
        let len = inputs.first().map(Vec::len).unwrap_or(0);
        let mut payload = vec![0u8; len];
        for &idx in &neighbors {
            let input = inputs
                .get(idx as usize)
                .ok_or_else(|| Error::InvalidInput(format!("neighbor {idx} out of range")))?;
            xor_into(&mut payload, input);
        }
        Self::new(neighbors, payload)
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    /// `idx1,idx2,...<TAB>hex-payload`
    pub fn to_line(&self) -> String {
        let mut line = String::new();
        for (i, n) in self.neighbors.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{n}");
        }
        line.push('\t');
        line.push_str(&hex::encode(&self.payload));
        line
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidInput(msg);
        let (idx, payload) = line
            .trim_end_matches(['\r', '\n'])
            .split_once('\t')
            .ok_or_else(|| bad(format!("missing tab in symbol line {line:?}")))?;
        let neighbors = idx
            .split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|e| bad(format!("bad index {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let payload = hex::decode(payload.trim()).map_err(|e| bad(format!("bad hex payload: {e}")))?;
        Self::new(neighbors, payload)
    }
}

/// Reads one symbol per nonblank line.
pub fn read_symbols(text: &str) -> Result<Vec<CodedSymbol>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(CodedSymbol::from_line)
        .collect()
}

pub fn write_symbols(symbols: &[CodedSymbol]) -> String {
    symbols.iter().map(|s| s.to_line() + "\n").collect()
}

fn xor_into(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Generator for output symbol `index` under encoding seed `seed`.
pub fn symbol_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws degrees and neighbor sets for one encoding.
struct SymbolSampler {
    degrees: Vec<u32>,
    weights: WeightedIndex<f64>,
    scratch: Vec<u32>,
    base: ChaCha8Rng,
}

impl SymbolSampler {
    fn new(p: &DegreeDistribution, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("cannot encode zero inputs"));
        }
        if p.max_degree() as usize > k {
            return Err(Error::param(format!(
                "distribution {} reaches degree {} but only {k} inputs exist",
                p.label(),
                p.max_degree()
            )));
        }
        let (degrees, masses): (Vec<u32>, Vec<f64>) = p.entries().iter().copied().unzip();
        let weights = WeightedIndex::new(&masses).map_err(|e| Error::param(format!("{e}")))?;
        Ok(SymbolSampler {
            degrees,
            weights,
            scratch: (0..k as u32).collect(),
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Sorted neighbor set of symbol `index`: partial Fisher-Yates over the
    /// index array, undone afterwards so the array stays the identity.
    fn neighbors(&mut self, index: u64) -> Vec<u32> {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        let d = self.degrees[self.weights.sample(&mut rng)] as usize;
        let k = self.scratch.len();
        let mut swaps = Vec::with_capacity(d);
        for i in 0..d {
            let j = rng.random_range(i..k);
            self.scratch.swap(i, j);
            swaps.push(j);
        }
        let mut chosen = self.scratch[..d].to_vec();
        for (i, &j) in swaps.iter().enumerate().rev() {
            self.scratch.swap(i, j);
        }
        chosen.sort_unstable();
        chosen
    }
}

/// Encodes `n` output symbols from `inputs` (all of equal length).
pub fn encode(inputs: &[Vec<u8>], p: &DegreeDistribution, n: usize, seed: u64) -> Result<Vec<CodedSymbol>> {
    let len = inputs.first().map(Vec::len).unwrap_or(0);
    if inputs.iter().any(|v| v.len() != len) {
        return Err(Error::InvalidInput("input symbols differ in length".into()));
    }
    let mut sampler = SymbolSampler::new(p, inputs.len(), seed)?;
    Ok((0..n as u64)
        .map(|i| {
            let neighbors = sampler.neighbors(i);
            let mut payload = vec![0u8; len];
            for &idx in &neighbors {
                xor_into(&mut payload, &inputs[idx as usize]);
            }
            CodedSymbol { neighbors, payload }
        })
        .collect())
}

/// Neighbor sets only, for runs where payload values are irrelevant.
pub fn sample_neighbor_sets(k: usize, p: &DegreeDistribution, n: usize, seed: u64) -> Result<Vec<Vec<u32>>> {
    let mut sampler = SymbolSampler::new(p, k, seed)?;
    Ok((0..n as u64).map(|i| sampler.neighbors(i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RippleOrder {
    /// Most recently released symbol first.
    #[default]
    Lifo,
    Fifo,
}

/// Peeling decoder state.
///
/// The ripple may hold stale entries for symbols that were depleted after
/// being queued; they are dropped when popped.
#[derive(Debug, Clone)]
pub struct DecoderState {
    k: usize,
    symbol_bytes: usize,
    recovered: Vec<bool>,
    values: Vec<u8>,
    neighbors: Vec<Vec<u32>>,
    residual_degree: Vec<u32>,
    residual_payload: Vec<u8>,
    ripple: VecDeque<u32>,
    edges: Vec<Vec<u32>>,
    order: RippleOrder,
    decoded: usize,
    edge_removals: usize,
}

impl DecoderState {
    pub fn new(symbols: &[CodedSymbol], k: usize) -> Result<Self> {
        let symbol_bytes = symbols.first().map(|s| s.payload.len()).unwrap_or(0);
        let mut edges = vec![Vec::new(); k];
        let mut residual_payload = Vec::with_capacity(symbols.len() * symbol_bytes);
        let mut ripple = VecDeque::new();
        for (s, sym) in symbols.iter().enumerate() {
            if sym.payload.len() != symbol_bytes {
                return Err(Error::InvalidInput(format!("symbol {s} has a payload of different length")));
            }
            if sym.neighbors.is_empty() {
                return Err(Error::InvalidInput(format!("symbol {s} has no neighbors")));
            }
            for &idx in &sym.neighbors {
                let list = edges
                    .get_mut(idx as usize)
                    .ok_or_else(|| Error::InvalidInput(format!("symbol {s} references input {idx} >= k = {k}")))?;
                list.push(s as u32);
            }
            residual_payload.extend_from_slice(&sym.payload);
            if sym.neighbors.len() == 1 {
                ripple.push_back(s as u32);
            }
        }
        Ok(DecoderState {
            k,
            symbol_bytes,
            recovered: vec![false; k],
            values: vec![0; k * symbol_bytes],
            neighbors: symbols.iter().map(|s| s.neighbors.clone()).collect(),
            residual_degree: symbols.iter().map(|s| s.neighbors.len() as u32).collect(),
            residual_payload,
            ripple,
            edges,
            order: RippleOrder::default(),
            decoded: 0,
            edge_removals: 0,
        })
    }

    pub fn with_order(mut self, order: RippleOrder) -> Self {
        self.order = order;
        self
    }

    /// Runs the peeling decoder until the ripple is empty.
    pub fn peel(&mut self) {
        let w = self.symbol_bytes;
        loop {
            let next = match self.order {
                RippleOrder::Lifo => self.ripple.pop_back(),
                RippleOrder::Fifo => self.ripple.pop_front(),
            };
            let Some(s) = next else { break };
            let s = s as usize;
            if self.residual_degree[s] != 1 {
                continue;
            }
            let input = *self.neighbors[s]
                .iter()
                .find(|&&i| !self.recovered[i as usize])
                .expect("residual degree 1 implies one unrecovered neighbor") as usize;
            self.recovered[input] = true;
            self.decoded += 1;
            let value = self.residual_payload[s * w..(s + 1) * w].to_vec();
            self.values[input * w..(input + 1) * w].copy_from_slice(&value);
            for &other in &self.edges[input] {
                let o = other as usize;
                self.residual_degree[o] -= 1;
                xor_into(&mut self.residual_payload[o * w..(o + 1) * w], &value);
                self.edge_removals += 1;
                if self.residual_degree[o] == 1 {
                    self.ripple.push_back(other);
                }
            }
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded
    }

    pub fn is_recovered(&self, input: usize) -> bool {
        self.recovered[input]
    }

    /// Number of symbol-input incidences cancelled so far.
    pub fn edge_removals(&self) -> usize {
        self.edge_removals
    }

    pub fn residual_degree(&self, symbol: usize) -> u32 {
        self.residual_degree[symbol]
    }

    pub fn residual_neighbors(&self, symbol: usize) -> Vec<u32> {
        self.neighbors[symbol]
            .iter()
            .copied()
            .filter(|&i| !self.recovered[i as usize])
            .collect()
    }

    /// Counts of residual degrees over undepleted symbols.
    pub fn residual_degree_histogram(&self) -> BTreeMap<u32, usize> {
        let mut hist = BTreeMap::new();
        for &d in self.residual_degree.iter().filter(|&&d| d > 0) {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist
    }

    pub fn recovered_values(&self) -> Vec<Option<Vec<u8>>> {
        let w = self.symbol_bytes;
        (0..self.k)
            .map(|i| self.recovered[i].then(|| self.values[i * w..(i + 1) * w].to_vec()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub values: Vec<Option<Vec<u8>>>,
    pub decoded_count: usize,
}

/// Peels `symbols` to a fixpoint over `k` inputs.
pub fn decode(symbols: &[CodedSymbol], k: usize) -> Result<DecodeOutcome> {
    let mut state = DecoderState::new(symbols, k)?;
    state.peel();
    Ok(DecodeOutcome { values: state.recovered_values(), decoded_count: state.decoded_count() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(neighbors: &[u32], payload: u8) -> CodedSymbol {
        CodedSymbol::new(neighbors.to_vec(), vec![payload]).unwrap()
    }

    #[test]
    fn encode_single_input() {
        let p = DegreeDistribution::point_mass(1).unwrap();
        let out = encode(&[vec![0b1]], &p, 3, 7).unwrap();
        assert_eq!(out.len(), 3);
        for s in out {
            assert_eq!(s.neighbors, vec![0]);
            assert_eq!(s.payload, vec![0b1]);
        }
    }

    #[test]
    fn xor_of_chosen_inputs() {
        let inputs = vec![vec![1u8], vec![0], vec![1]];
        let s = CodedSymbol::from_inputs(vec![0, 2], &inputs).unwrap();
        assert_eq!(s.payload, vec![0]);
    }

    #[test]
    fn encode_rejects_bad_parameters() {
        let p = DegreeDistribution::point_mass(3).unwrap();
        assert!(matches!(encode(&[vec![0], vec![1]], &p, 1, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(encode(&[], &p, 1, 0), Err(Error::InvalidParameter(_))));
        assert!(encode(&[vec![0], vec![1, 2], vec![3]], &p, 1, 0).is_err());
    }

    #[test]
    fn encode_is_deterministic() {
        let p = crate::degree_dist::ideal_soliton(50).unwrap();
        let inputs: Vec<Vec<u8>> = (0..50u8).map(|i| vec![i, i.wrapping_mul(7)]).collect();
        let a = encode(&inputs, &p, 200, 42).unwrap();
        let b = encode(&inputs, &p, 200, 42).unwrap();
        assert_eq!(a, b);
        let c = encode(&inputs, &p, 200, 43).unwrap();
        assert_ne!(a, c);
        // prefix-stable: symbol i does not depend on n
        assert_eq!(&encode(&inputs, &p, 20, 42).unwrap()[..], &a[..20]);
    }

    #[test]
    fn decode_chain() {
        let symbols = vec![sym(&[0], 5), sym(&[0, 1], 5 ^ 9), sym(&[1, 2], 9 ^ 3)];
        let out = decode(&symbols, 3).unwrap();
        assert_eq!(out.decoded_count, 3);
        assert_eq!(out.values, vec![Some(vec![5]), Some(vec![9]), Some(vec![3])]);
    }

    #[test]
    fn decode_stalls_without_degree_one() {
        let symbols = vec![sym(&[0, 1], 1), sym(&[1, 2], 2)];
        let mut state = DecoderState::new(&symbols, 3).unwrap();
        state.peel();
        assert_eq!(state.decoded_count(), 0);
        assert_eq!(state.residual_degree_histogram(), BTreeMap::from([(2, 2)]));
    }

    #[test]
    fn decode_single() {
        let out = decode(&[sym(&[0], 0xAB)], 1).unwrap();
        assert_eq!(out.values, vec![Some(vec![0xAB])]);
    }

    #[test]
    fn decode_rejects_out_of_range() {
        assert!(matches!(decode(&[sym(&[3], 0)], 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn histogram_before_and_after() {
        let symbols = vec![sym(&[0], 1), sym(&[0, 1], 3)];
        let mut state = DecoderState::new(&symbols, 2).unwrap();
        assert_eq!(state.residual_degree_histogram(), BTreeMap::from([(1, 1), (2, 1)]));
        state.peel();
        assert!(state.residual_degree_histogram().is_empty());
        assert_eq!(state.edge_removals(), 3);
    }

    #[test]
    fn symbol_line_format() {
        let s = CodedSymbol::new(vec![4, 1, 7], vec![0xde, 0xad]).unwrap();
        assert_eq!(s.to_line(), "1,4,7\tdead");
        assert_eq!(CodedSymbol::from_line("1,4,7\tdead\n").unwrap(), s);
        assert!(CodedSymbol::from_line("1,4,7 dead").is_err());
        assert!(CodedSymbol::from_line("1,1\t00").is_err());
        assert!(CodedSymbol::from_line("\t00").is_err());
        let text = write_symbols(&[s.clone(), sym(&[0], 1)]);
        assert_eq!(read_symbols(&text).unwrap(), vec![s, sym(&[0], 1)]);
    }
}
