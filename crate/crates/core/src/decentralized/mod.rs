//! Independent random placement with two delivery procedures.
//!
//! Each user caches `floor(M F / N)` uniformly random bit positions of every
//! file, drawn from its own substream. For user `k` and a subset `S` of the
//! other users, `V_{k,S}` is the ordered list of positions of `W_{d_k}` that
//! `k` lacks and that are cached by exactly the users in `S`.
//!
//! * Delivery 1 sends, for every subset `S` from the largest down, the XOR of
//!   the zero-padded `V_{k, S \ {k}}` over `k in S`.
//! * Delivery 2 sends random GF(2) combinations of each requested file until
//!   every requester can solve for its missing bits.
//!
//! The position lists of all `V` segments are side information known to both
//! ends and are not counted in the rate.
//!
//! Delivery 2 draws combinations supported on one block of `block_bits`
//! consecutive bits at a time. A block as wide as the file gives fully dense
//! combinations; narrower blocks keep elimination cheap at large `F`.

mod gf2;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rayon::prelude::*;

pub use gf2::Gf2Basis;

use crate::bits::BitString;
use crate::library::{DemandVector, FileLibrary, SchemeError};
use crate::rate_model::SystemParams;
use crate::rng::{substream, Substream};
use crate::subsets::{SubsetMask, MAX_USERS};
use crate::transcript::{DeliveryTranscript, SegmentLabel};

pub const DEFAULT_BLOCK_BITS: usize = 512;
/// Coefficient rows drawn per substream.
pub const RLC_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RlcConfig {
    pub block_bits: usize,
}

impl Default for RlcConfig {
    fn default() -> Self {
        Self {
            block_bits: DEFAULT_BLOCK_BITS,
        }
    }
}

/// Bits cached per file: `floor(M F / N)`, never above `F`.
pub fn bits_per_file(memory: f64, files: usize, file_bits: usize) -> usize {
    let exact = memory * file_bits as f64 / files as f64;
    // absorb rounding error when M F / N is an integer
    ((exact + 1e-9 * exact.max(1.0)).floor() as usize).min(file_bits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomCacheState {
    seed: u64,
    file_bits: usize,
    per_file: usize,
    /// `masks[k][n]`: positions of `W_n` cached by user `k`.
    masks: Vec<Vec<BitString>>,
    /// `values[k][n]`: `W_n` on the cached positions, zero elsewhere.
    values: Vec<Vec<BitString>>,
}

impl RandomCacheState {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn users(&self) -> usize {
        self.masks.len()
    }

    pub fn files(&self) -> usize {
        self.masks[0].len()
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn bits_per_file(&self) -> usize {
        self.per_file
    }

    pub fn mask(&self, user: usize, file: usize) -> &BitString {
        &self.masks[user][file]
    }

    pub fn values(&self, user: usize, file: usize) -> &BitString {
        &self.values[user][file]
    }

    pub fn cached_bits(&self, user: usize) -> usize {
        self.masks[user].iter().map(BitString::count_ones).sum()
    }
}

pub fn place_decentralized(
    library: &FileLibrary,
    params: &SystemParams<f64>,
    seed: u64,
) -> Result<RandomCacheState, SchemeError> {
    let (users, files, f) = (params.users(), library.len(), library.file_bits());
    if users > MAX_USERS {
        return Err(SchemeError::Unsupported(format!("K = {users}")));
    }
    if params.files() != files {
        return Err(SchemeError::Unsupported(format!(
            "library has {files} files, parameters say {}",
            params.files()
        )));
    }
    let per_file = bits_per_file(params.memory(), files, f);
    let mut masks = Vec::with_capacity(users);
    let mut values = Vec::with_capacity(users);
    for k in 0..users {
        let mut mk = Vec::with_capacity(files);
        let mut vk = Vec::with_capacity(files);
        for n in 0..files {
            let mut rng = substream(seed, Substream::Placement { user: k, file: n });
            let mut mask = BitString::zeros(f);
            for p in index::sample(&mut rng, f, per_file) {
                mask.set(p, true);
            }
            vk.push(library.file(n).and(&mask));
            mk.push(mask);
        }
        masks.push(mk);
        values.push(vk);
    }
    Ok(RandomCacheState {
        seed,
        file_bits: f,
        per_file,
        masks,
        values,
    })
}

/// All `V_{k,S}` for one demand vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VSegments {
    demands: DemandVector,
    file_bits: usize,
    /// `by_owner[k][S]`: ascending positions; only non-empty segments are stored.
    by_owner: Vec<BTreeMap<SubsetMask, Vec<usize>>>,
}

impl VSegments {
    pub fn demands(&self) -> &DemandVector {
        &self.demands
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    /// Positions of `V_{k,S}`, empty if no bit falls in it.
    pub fn get(&self, k: usize, subset: SubsetMask) -> &[usize] {
        self.by_owner[k].get(&subset).map_or(&[], Vec::as_slice)
    }

    /// Non-empty segments owned by `k`.
    pub fn owned(&self, k: usize) -> impl Iterator<Item = (SubsetMask, &[usize])> {
        self.by_owner[k].iter().map(|(s, v)| (*s, v.as_slice()))
    }

    /// Bits of `W_{d_k}` that `k` must receive.
    pub fn missing(&self, k: usize) -> usize {
        self.by_owner[k].values().map(Vec::len).sum()
    }
}

pub fn compute_v_segments(
    caches: &RandomCacheState,
    demands: &DemandVector,
) -> Result<VSegments, SchemeError> {
    let users = caches.users();
    demands.check_users(users)?;
    let f = caches.file_bits;
    let mut by_owner = vec![BTreeMap::<SubsetMask, Vec<usize>>::new(); users];
    for (k, segs) in by_owner.iter_mut().enumerate() {
        let d = demands.of(k);
        let columns: Vec<&[u64]> = (0..users).map(|j| caches.masks[j][d].words()).collect();
        for (w, &own) in columns[k].iter().enumerate() {
            let valid = if (w + 1) * 64 <= f {
                u64::MAX
            } else {
                (1u64 << (f % 64)) - 1
            };
            let mut missing = !own & valid;
            while missing != 0 {
                let b = missing.trailing_zeros();
                missing &= missing - 1;
                let mut s = 0u64;
                for (j, col) in columns.iter().enumerate() {
                    s |= ((col[w] >> b) & 1) << j;
                }
                segs.entry(SubsetMask(s))
                    .or_default()
                    .push(w * 64 + b as usize);
            }
        }
    }
    Ok(VSegments {
        demands: demands.clone(),
        file_bits: f,
        by_owner,
    })
}

/// Subsets `S` with a non-empty coded segment, largest first, then in
/// colexicographic order.
fn delivery1_subsets(v: &VSegments) -> Vec<SubsetMask> {
    let set: BTreeSet<(std::cmp::Reverse<usize>, SubsetMask)> = v
        .by_owner
        .iter()
        .enumerate()
        .flat_map(|(k, segs)| segs.keys().map(move |s| s.with(k)))
        .map(|s| (std::cmp::Reverse(s.len()), s))
        .collect();
    set.into_iter().map(|(_, s)| s).collect()
}

/// Zero-length segments are omitted.
pub fn deliver1(library: &FileLibrary, v: &VSegments) -> DeliveryTranscript {
    let mut transcript = DeliveryTranscript::new(v.file_bits);
    for subset in delivery1_subsets(v) {
        let mut payload = BitString::default();
        for k in subset.members() {
            let positions = v.get(k, subset.without(k));
            if !positions.is_empty() {
                let part = library.file(v.demands.of(k)).gather(positions.iter().copied());
                payload.xor_padded(&part);
            }
        }
        transcript.push(SegmentLabel::Subset(subset), payload);
    }
    transcript
}

/// Coefficient rows for one block of one file, regenerated identically by
/// the server and every user.
struct RowStream {
    seed: u64,
    file: usize,
    block: usize,
    width: usize,
    batch: Vec<BitString>,
    next: usize,
}

impl RowStream {
    fn new(seed: u64, file: usize, block: usize, width: usize) -> Self {
        Self {
            seed,
            file,
            block,
            width,
            batch: Vec::new(),
            next: 0,
        }
    }

    fn next_row(&mut self) -> &BitString {
        let i = self.next % RLC_BATCH;
        if i == 0 {
            let mut rng = substream(
                self.seed,
                Substream::Rlc {
                    file: self.file,
                    block: self.block,
                    batch: self.next / RLC_BATCH,
                },
            );
            self.batch = (0..RLC_BATCH)
                .map(|_| BitString::random(self.width, &mut rng))
                .collect();
        }
        self.next += 1;
        &self.batch[i]
    }
}

fn masked(row: &BitString, mask: &BitString) -> Vec<u64> {
    row.words().iter().zip(mask.words()).map(|(a, b)| a & b).collect()
}

fn block_range(block: usize, block_bits: usize, file_bits: usize) -> (usize, usize) {
    let start = block * block_bits;
    (start, block_bits.min(file_bits - start))
}

/// Unknown positions of each requester of `file` within one block.
fn block_unknowns(
    caches: &RandomCacheState,
    requesters: &[usize],
    file: usize,
    start: usize,
    width: usize,
) -> Vec<BitString> {
    requesters
        .iter()
        .map(|&k| caches.masks[k][file].slice(start, width).complement())
        .collect()
}

/// `Σ_n Σ_blocks max_k (unknown bits of k)`: no Delivery 2 transcript can be
/// shorter.
pub fn delivery2_lower_bound(
    caches: &RandomCacheState,
    demands: &DemandVector,
    config: RlcConfig,
) -> usize {
    let f = caches.file_bits;
    let mut total = 0;
    for n in demands.distinct_files() {
        let reqs: Vec<usize> = demands.requesters(n).collect();
        for block in 0..f.div_ceil(config.block_bits) {
            let (start, width) = block_range(block, config.block_bits, f);
            total += block_unknowns(caches, &reqs, n, start, width)
                .iter()
                .map(BitString::count_ones)
                .max()
                .unwrap_or(0);
        }
    }
    total
}

/// Sends each block's combinations until the last requester reaches full
/// rank on its unknowns; the exact number sent is the payload length.
pub fn deliver2(
    library: &FileLibrary,
    caches: &RandomCacheState,
    demands: &DemandVector,
    config: RlcConfig,
) -> Result<DeliveryTranscript, SchemeError> {
    demands.check_users(caches.users())?;
    if config.block_bits == 0 {
        return Err(SchemeError::Unsupported("zero block width".into()));
    }
    let f = caches.file_bits;
    let mut transcript = DeliveryTranscript::new(f);
    for n in demands.distinct_files() {
        let reqs: Vec<usize> = demands.requesters(n).collect();
        for block in 0..f.div_ceil(config.block_bits) {
            let (start, width) = block_range(block, config.block_bits, f);
            let unknowns = block_unknowns(caches, &reqs, n, start, width);
            let mut pending: Vec<(Gf2Basis, usize, &BitString)> = unknowns
                .iter()
                .filter(|u| u.count_ones() > 0)
                .map(|u| (Gf2Basis::new(width), u.count_ones(), u))
                .collect();
            let data = library.file(n).slice(start, width);
            let mut rows = RowStream::new(caches.seed, n, block, width);
            let mut payload = BitString::default();
            while !pending.is_empty() {
                let row = rows.next_row();
                payload.push(row.dot(&data));
                for (basis, _, unknown) in pending.iter_mut() {
                    basis.insert(&mut masked(row, unknown), false);
                }
                pending.retain(|(basis, need, _)| basis.rank() < *need);
            }
            if !payload.is_empty() {
                transcript.push(
                    SegmentLabel::Rlc {
                        file: n,
                        block,
                        block_bits: config.block_bits,
                    },
                    payload,
                );
            }
        }
    }
    Ok(transcript)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Procedure {
    Delivery1,
    Delivery2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecentralizedDelivery {
    pub procedure: Procedure,
    pub transcript: DeliveryTranscript,
    pub delivery1_bits: usize,
    /// `None` when Delivery 1 already beat the Delivery 2 lower bound.
    pub delivery2_bits: Option<usize>,
}

/// The shorter of the two transcripts for this realization; ties go to
/// Delivery 1.
pub fn deliver_best_decentralized(
    library: &FileLibrary,
    caches: &RandomCacheState,
    v: &VSegments,
    config: RlcConfig,
) -> Result<DecentralizedDelivery, SchemeError> {
    let d1 = deliver1(library, v);
    let d1_bits = d1.total_bits();
    if d1_bits <= delivery2_lower_bound(caches, &v.demands, config) {
        return Ok(DecentralizedDelivery {
            procedure: Procedure::Delivery1,
            transcript: d1,
            delivery1_bits: d1_bits,
            delivery2_bits: None,
        });
    }
    let d2 = deliver2(library, caches, &v.demands, config)?;
    let d2_bits = d2.total_bits();
    let (procedure, transcript) = if d2_bits < d1_bits {
        (Procedure::Delivery2, d2)
    } else {
        (Procedure::Delivery1, d1)
    };
    Ok(DecentralizedDelivery {
        procedure,
        transcript,
        delivery1_bits: d1_bits,
        delivery2_bits: Some(d2_bits),
    })
}

/// Recover `W_{d_user}` from the user's cache, the side information and
/// either kind of transcript.
pub fn decode_decentralized(
    user: usize,
    caches: &RandomCacheState,
    v: &VSegments,
    transcript: &DeliveryTranscript,
) -> Result<BitString, SchemeError> {
    let is_rlc = transcript
        .segments()
        .iter()
        .any(|s| matches!(s.label, SegmentLabel::Rlc { .. }));
    if is_rlc {
        decode2(user, caches, v, transcript)
    } else {
        decode1(user, caches, v, transcript)
    }
}

fn decode1(
    user: usize,
    caches: &RandomCacheState,
    v: &VSegments,
    transcript: &DeliveryTranscript,
) -> Result<BitString, SchemeError> {
    let d = v.demands.of(user);
    let mut out = caches.values[user][d].clone();
    let mut filled = caches.masks[user][d].clone();
    for seg in transcript.segments() {
        let SegmentLabel::Subset(subset) = seg.label else {
            continue;
        };
        if !subset.contains(user) {
            continue;
        }
        let mine = v.get(user, subset.without(user));
        if mine.is_empty() {
            continue;
        }
        let mut piece = seg.payload.clone();
        for j in subset.members().filter(|&j| j != user) {
            let theirs = v.get(j, subset.without(j));
            if !theirs.is_empty() {
                // user is in S \ {j}, so it caches every one of these bits
                piece.xor_padded(&caches.values[user][v.demands.of(j)].gather(theirs.iter().copied()));
            }
        }
        if piece.len() < mine.len() {
            return Err(SchemeError::DecodeFailure {
                user,
                reason: format!("segment {subset} too short"),
            });
        }
        for (i, &p) in mine.iter().enumerate() {
            out.set(p, piece.get(i));
            filled.set(p, true);
        }
    }
    if filled.count_ones() != v.file_bits {
        return Err(SchemeError::DecodeFailure {
            user,
            reason: format!("{} bits never delivered", v.file_bits - filled.count_ones()),
        });
    }
    Ok(out)
}

fn decode2(
    user: usize,
    caches: &RandomCacheState,
    v: &VSegments,
    transcript: &DeliveryTranscript,
) -> Result<BitString, SchemeError> {
    let fail = |reason: String| SchemeError::DecodeFailure { user, reason };
    let d = v.demands.of(user);
    let f = v.file_bits;
    let mut out = caches.values[user][d].clone();
    let block_bits = transcript
        .segments()
        .iter()
        .find_map(|s| match s.label {
            SegmentLabel::Rlc { block_bits, .. } => Some(block_bits),
            _ => None,
        })
        .unwrap_or(f);
    for block in 0..f.div_ceil(block_bits) {
        let (start, width) = block_range(block, block_bits, f);
        let unknown = caches.masks[user][d].slice(start, width).complement();
        let need: Vec<usize> = unknown.ones().collect();
        if need.is_empty() {
            continue;
        }
        let seg = transcript
            .find(SegmentLabel::Rlc {
                file: d,
                block,
                block_bits,
            })
            .ok_or_else(|| fail(format!("no combinations for block {block}")))?;
        let known = caches.values[user][d].slice(start, width);
        let mut rows = RowStream::new(caches.seed, d, block, width);
        let mut basis = Gf2Basis::new(width);
        for bit in seg.payload.iter() {
            if basis.rank() == need.len() {
                break;
            }
            let row = rows.next_row();
            let rhs = bit ^ row.dot(&known);
            basis.insert(&mut masked(row, &unknown), rhs);
        }
        let solved = basis
            .solve(&need)
            .ok_or_else(|| fail(format!("block {block} is rank deficient")))?;
        for (p, x) in need.into_iter().zip(solved) {
            out.set(start + p, x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub procedure: Procedure,
    pub measured_rate: f64,
    pub delivery1_rate: f64,
    pub delivery2_rate: Option<f64>,
    pub decode_ok: bool,
}

/// One seeded realization: random library, placement, best delivery, and a
/// decode check of every user.
pub fn run_trial(
    params: &SystemParams<f64>,
    demands: &DemandVector,
    seed: u64,
    config: RlcConfig,
) -> Result<TrialOutcome, SchemeError> {
    let f = params.file_bits();
    let library = FileLibrary::random(params.files(), f, seed);
    let caches = place_decentralized(&library, params, seed)?;
    let v = compute_v_segments(&caches, demands)?;
    let best = deliver_best_decentralized(&library, &caches, &v, config)?;
    let decode_ok = (0..params.users()).all(|k| {
        decode_decentralized(k, &caches, &v, &best.transcript)
            .is_ok_and(|w| &w == library.file(demands.of(k)))
    });
    Ok(TrialOutcome {
        seed,
        procedure: best.procedure,
        measured_rate: best.transcript.measured_rate(),
        delivery1_rate: best.delivery1_bits as f64 / f as f64,
        delivery2_rate: best.delivery2_bits.map(|b| b as f64 / f as f64),
        decode_ok,
    })
}

/// Independent trials, run in parallel; results are in `seeds` order.
pub fn monte_carlo(
    params: &SystemParams<f64>,
    demands: &DemandVector,
    seeds: &[u64],
    config: RlcConfig,
) -> Result<Vec<TrialOutcome>, SchemeError> {
    seeds
        .par_iter()
        .map(|&s| run_trial(params, demands, s, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(
        k: usize,
        n: usize,
        m: f64,
        f: usize,
        seed: u64,
    ) -> (FileLibrary, SystemParams<f64>, RandomCacheState) {
        let params = SystemParams::new(k, n, m).unwrap().with_file_bits(f).unwrap();
        let library = FileLibrary::random(n, f, seed);
        let caches = place_decentralized(&library, &params, seed).unwrap();
        (library, params, caches)
    }

    #[test]
    fn cache_accounting() {
        let (library, _, caches) = setup(2, 2, 1.0, 1024, 7);
        for k in 0..2 {
            for n in 0..2 {
                assert_eq!(caches.mask(k, n).count_ones(), 512);
                let mut check = library.file(n).clone();
                for p in 0..1024 {
                    if !caches.mask(k, n).get(p) {
                        check.set(p, false);
                    }
                }
                assert_eq!(&check, caches.values(k, n));
            }
            assert_eq!(caches.cached_bits(k), 1024);
        }
        assert_ne!(caches.mask(0, 0), caches.mask(1, 0));
        assert_ne!(caches.mask(0, 0), caches.mask(0, 1));
        let (_, _, full) = setup(3, 2, 2.0, 100, 1);
        assert!((0..3).all(|k| full.cached_bits(k) == 200));
        let (_, _, empty) = setup(3, 2, 0.001, 100, 1);
        assert!((0..3).all(|k| empty.cached_bits(k) == 0));
    }

    #[test]
    fn floor_of_cache_size() {
        assert_eq!(bits_per_file(1.5, 2, 32768), 24576);
        assert_eq!(bits_per_file(0.3, 3, 100), 10);
        assert_eq!(bits_per_file(1.0, 3, 100), 33);
        assert_eq!(bits_per_file(3.0, 3, 100), 100);
    }

    #[test]
    fn two_user_segments_by_set_algebra() {
        let (_, _, caches) = setup(2, 2, 1.0, 64, 3);
        let d = DemandVector::new(vec![0, 1], 2).unwrap();
        let v = compute_v_segments(&caches, &d).unwrap();
        let none: Vec<usize> = (0..64)
            .filter(|&p| !caches.mask(0, 0).get(p) && !caches.mask(1, 0).get(p))
            .collect();
        let only_two: Vec<usize> = (0..64)
            .filter(|&p| !caches.mask(0, 0).get(p) && caches.mask(1, 0).get(p))
            .collect();
        assert_eq!(v.get(0, SubsetMask::EMPTY), none.as_slice());
        assert_eq!(v.get(0, SubsetMask::from_members([1])), only_two.as_slice());
        assert_eq!(v.missing(0), 32);
    }

    #[test]
    fn full_memory_needs_nothing() {
        let (library, _, caches) = setup(3, 2, 2.0, 64, 5);
        let d = DemandVector::new(vec![0, 1, 0], 2).unwrap();
        let v = compute_v_segments(&caches, &d).unwrap();
        assert!((0..3).all(|k| v.owned(k).next().is_none()));
        let best = deliver_best_decentralized(&library, &caches, &v, RlcConfig::default()).unwrap();
        assert_eq!(best.procedure, Procedure::Delivery1);
        assert_eq!(best.transcript.total_bits(), 0);
        assert_eq!(deliver2(&library, &caches, &d, RlcConfig::default()).unwrap().total_bits(), 0);
        for k in 0..3 {
            assert_eq!(&decode_decentralized(k, &caches, &v, &best.transcript).unwrap(), library.file(d.of(k)));
        }
    }

    #[test]
    fn delivery1_padding_and_order() {
        let (library, _, caches) = setup(3, 3, 1.0, 256, 9);
        let d = DemandVector::distinct(3, 3);
        let v = compute_v_segments(&caches, &d).unwrap();
        let t = deliver1(&library, &v);
        let sizes: Vec<usize> = t
            .segments()
            .iter()
            .map(|s| match s.label {
                SegmentLabel::Subset(m) => m.len(),
                _ => unreachable!(),
            })
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        for seg in t.segments() {
            let SegmentLabel::Subset(s) = seg.label else { unreachable!() };
            let longest = s.members().map(|k| v.get(k, s.without(k)).len()).max().unwrap();
            assert_eq!(seg.payload.len(), longest);
        }
        for k in 0..3 {
            assert_eq!(&decode_decentralized(k, &caches, &v, &t).unwrap(), library.file(d.of(k)));
        }
    }

    #[test]
    fn delivery2_single_requester_overshoot() {
        // empty caches, one requester per file, one dense block
        for seed in 0..16 {
            let (library, _, caches) = setup(2, 2, 0.001, 512, seed);
            let d = DemandVector::new(vec![0, 1], 2).unwrap();
            let t = deliver2(&library, &caches, &d, RlcConfig::default()).unwrap();
            assert_eq!(t.segments().len(), 2);
            for seg in t.segments() {
                assert!(seg.payload.len() >= 512 && seg.payload.len() - 512 <= 10);
            }
            let v = compute_v_segments(&caches, &d).unwrap();
            for k in 0..2 {
                assert_eq!(&decode_decentralized(k, &caches, &v, &t).unwrap(), library.file(d.of(k)));
            }
        }
    }

    #[test]
    fn delivery2_blocks_and_partial_tail() {
        let (library, _, caches) = setup(3, 2, 0.5, 1000, 4);
        let d = DemandVector::new(vec![1, 1, 0], 2).unwrap();
        let config = RlcConfig { block_bits: 128 };
        let t = deliver2(&library, &caches, &d, config).unwrap();
        let bound = delivery2_lower_bound(&caches, &d, config);
        assert!(t.total_bits() >= bound);
        assert!(t.total_bits() <= bound + 16 * 12);
        let v = compute_v_segments(&caches, &d).unwrap();
        for k in 0..3 {
            assert_eq!(&decode_decentralized(k, &caches, &v, &t).unwrap(), library.file(d.of(k)));
        }
    }

    #[test]
    fn corrupted_transcript_fails_to_decode() {
        let (library, _, caches) = setup(2, 2, 0.5, 256, 2);
        let d = DemandVector::new(vec![0, 1], 2).unwrap();
        let v = compute_v_segments(&caches, &d).unwrap();
        let t = deliver1(&library, &v);
        let mut truncated = DeliveryTranscript::new(256);
        for seg in t.segments().iter().skip(1) {
            truncated.push(seg.label, seg.payload.clone());
        }
        assert!(matches!(
            decode_decentralized(0, &caches, &v, &truncated)
                .and(decode_decentralized(1, &caches, &v, &truncated)),
            Err(SchemeError::DecodeFailure { .. })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let params = SystemParams::new(3, 2, 0.5).unwrap().with_file_bits(300).unwrap();
        let d = DemandVector::distinct(3, 2);
        let a = run_trial(&params, &d, 11, RlcConfig::default()).unwrap();
        let b = run_trial(&params, &d, 11, RlcConfig::default()).unwrap();
        assert_eq!(a, b);
        let (_, _, c1) = setup(3, 2, 0.5, 300, 11);
        let (_, _, c2) = setup(3, 2, 0.5, 300, 11);
        assert_eq!(c1, c2);
        let many = monte_carlo(&params, &d, &[1, 2, 3], RlcConfig::default()).unwrap();
        assert_eq!(many.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(many.iter().all(|t| t.decode_ok));
    }
}
