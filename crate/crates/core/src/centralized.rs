//! Coordinated placement with XOR-coded delivery, the uncoded fallback, and
//! memory sharing between neighbouring corner points.
//!
//! At a corner point `t = K M / N` every file is cut into `C(K, t)` equal
//! subfiles, one per `t`-subset `T` of users, and user `k` caches every
//! subfile whose subset contains `k`. For each `(t+1)`-subset `S` the server
//! sends `XOR_{k in S} W_{d_k, S \ {k}}`; each user in `S` already holds all
//! terms but its own.
//!
//! Subsets are ordered colexicographically. Subfile `T` of a file is the
//! bit range `[rank(T) L, (rank(T) + 1) L)` with `L = F / C(K, t)`, and
//! transcript segments follow the same subset order.

use std::collections::{BTreeMap, HashMap};

use crate::bits::BitString;
use crate::library::{ChunkLayout, DemandVector, FileLibrary, SchemeError};
use crate::rate_model::{centralized_rate_corner, SystemParams};
use crate::subsets::{binomial, k_subsets, SubsetMask, MAX_USERS};
use crate::transcript::{DeliveryTranscript, SegmentLabel};

/// Every file cut into `C(K, t)` equal contiguous subfiles.
#[derive(Debug, Clone)]
pub struct SubfilePartition {
    users: usize,
    t: usize,
    subfile_bits: usize,
    /// `subfiles[n][rank(T)]`
    subfiles: Vec<Vec<BitString>>,
}

impl SubfilePartition {
    pub fn split(library: &FileLibrary, users: usize, t: usize) -> Result<Self, SchemeError> {
        check_users(users)?;
        if t > users {
            return Err(SchemeError::Unsupported(format!("t = {t} > K = {users}")));
        }
        let parts = binomial(users, t);
        let file_bits = library.file_bits();
        if !(file_bits as u64).is_multiple_of(parts) {
            return Err(SchemeError::IndivisibleFile { file_bits, parts });
        }
        let subfile_bits = file_bits / parts as usize;
        let subfiles = library
            .files()
            .iter()
            .map(|f| {
                (0..parts as usize)
                    .map(|r| f.slice(r * subfile_bits, subfile_bits))
                    .collect()
            })
            .collect();
        Ok(Self {
            users,
            t,
            subfile_bits,
            subfiles,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn subfile_bits(&self) -> usize {
        self.subfile_bits
    }

    pub fn file_bits(&self) -> usize {
        self.subfile_bits * self.subfiles.first().map_or(0, Vec::len)
    }

    /// `W_{n, T}`; `subset` must have exactly `t` members.
    pub fn subfile(&self, n: usize, subset: SubsetMask) -> &BitString {
        debug_assert_eq!(subset.len(), self.t);
        &self.subfiles[n][subset.colex_rank()]
    }
}

fn check_users(users: usize) -> Result<(), SchemeError> {
    if (2..=MAX_USERS).contains(&users) {
        Ok(())
    } else {
        Err(SchemeError::Unsupported(format!("K = {users}")))
    }
}

/// Which delivery a corner system uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Branch {
    Coded,
    Uncoded,
}

/// Contents of every user's cache.
#[derive(Debug, Clone)]
pub enum CentralCacheState {
    /// `contents[k]` maps `(file, T)` to `W_{file, T}` for every `T` containing `k`.
    Coded {
        t: usize,
        subfile_bits: usize,
        contents: Vec<BTreeMap<(usize, SubsetMask), BitString>>,
    },
    /// `contents[k][n]` is the first `prefix_bits` bits of file `n`.
    Uncoded {
        prefix_bits: usize,
        contents: Vec<Vec<BitString>>,
    },
}

impl CentralCacheState {
    pub fn users(&self) -> usize {
        match self {
            CentralCacheState::Coded { contents, .. } => contents.len(),
            CentralCacheState::Uncoded { contents, .. } => contents.len(),
        }
    }

    pub fn cached_bits(&self, user: usize) -> usize {
        match self {
            CentralCacheState::Coded { contents, .. } => {
                contents[user].values().map(BitString::len).sum()
            }
            CentralCacheState::Uncoded { contents, .. } => {
                contents[user].iter().map(BitString::len).sum()
            }
        }
    }
}

/// Coded placement: user `k` stores `W_{n, T}` for all `n` and all `T` containing `k`.
pub fn place_coded(partition: &SubfilePartition) -> CentralCacheState {
    let (users, t) = (partition.users, partition.t);
    let files = partition.subfiles.len();
    let mut contents = vec![BTreeMap::new(); users];
    for subset in k_subsets(users, t) {
        for k in subset.members() {
            for n in 0..files {
                contents[k].insert((n, subset), partition.subfile(n, subset).clone());
            }
        }
    }
    CentralCacheState::Coded {
        t,
        subfile_bits: partition.subfile_bits,
        contents,
    }
}

/// Uncoded placement: every user stores the same `prefix_bits`-bit prefix of every file.
pub fn place_uncoded(library: &FileLibrary, users: usize, prefix_bits: usize) -> CentralCacheState {
    let prefix_bits = prefix_bits.min(library.file_bits());
    let prefixes: Vec<BitString> = library
        .files()
        .iter()
        .map(|f| f.slice(0, prefix_bits))
        .collect();
    CentralCacheState::Uncoded {
        prefix_bits,
        contents: vec![prefixes; users],
    }
}

/// `t = K M / N`, which must be an integer.
pub fn corner_index(params: &SystemParams<f64>) -> Result<usize, SchemeError> {
    let geo = params.geometry();
    if geo.is_corner() {
        Ok(geo.s)
    } else {
        Err(SchemeError::NonCornerMemory(geo.t))
    }
}

/// Coded placement at the corner given by `params`.
pub fn place_centralized(
    library: &FileLibrary,
    params: &SystemParams<f64>,
) -> Result<(SubfilePartition, CentralCacheState), SchemeError> {
    let t = corner_index(params)?;
    let partition = SubfilePartition::split(library, params.users(), t)?;
    let cache = place_coded(&partition);
    Ok((partition, cache))
}

/// One segment per `(t+1)`-subset `S`, carrying `XOR_{k in S} W_{d_k, S \ {k}}`.
pub fn deliver_centralized(partition: &SubfilePartition, demands: &DemandVector) -> DeliveryTranscript {
    let (users, t) = (partition.users, partition.t);
    assert_eq!(demands.users(), users);
    let mut transcript = DeliveryTranscript::new(partition.file_bits());
    for subset in k_subsets(users, t + 1) {
        let mut payload = BitString::zeros(partition.subfile_bits);
        for k in subset.members() {
            payload.xor_padded(partition.subfile(demands.of(k), subset.without(k)));
        }
        transcript.push(SegmentLabel::Subset(subset), payload);
    }
    transcript
}

/// The uncached suffix of each distinct requested file, once.
pub fn deliver_uncoded(
    library: &FileLibrary,
    cache: &CentralCacheState,
    demands: &DemandVector,
) -> Result<DeliveryTranscript, SchemeError> {
    let CentralCacheState::Uncoded { prefix_bits, .. } = cache else {
        return Err(SchemeError::Unsupported("uncoded delivery needs uncoded placement".into()));
    };
    let f = library.file_bits();
    let mut transcript = DeliveryTranscript::new(f);
    for n in demands.distinct_files() {
        transcript.push(
            SegmentLabel::File(n),
            library.file(n).slice(*prefix_bits, f - prefix_bits),
        );
    }
    Ok(transcript)
}

/// Recover `W_{d_user}` from the user's cache and the received transcript.
pub fn decode_centralized(
    user: usize,
    cache: &CentralCacheState,
    transcript: &DeliveryTranscript,
    demands: &DemandVector,
) -> Result<BitString, SchemeError> {
    let fail = |reason: String| SchemeError::DecodeFailure { user, reason };
    let wanted = demands.of(user);
    match cache {
        CentralCacheState::Uncoded { contents, .. } => {
            let mut out = contents[user][wanted].clone();
            let suffix = transcript
                .find(SegmentLabel::File(wanted))
                .ok_or_else(|| fail(format!("no segment for file {}", wanted + 1)))?;
            out.append(&suffix.payload);
            Ok(out)
        }
        CentralCacheState::Coded {
            t,
            subfile_bits,
            contents,
        } => {
            let users = contents.len();
            let mine = &contents[user];
            let received: HashMap<SegmentLabel, &BitString> = transcript
                .segments()
                .iter()
                .map(|s| (s.label, &s.payload))
                .collect();
            let mut out = BitString::default();
            for subset in k_subsets(users, *t) {
                if subset.contains(user) {
                    let piece = mine
                        .get(&(wanted, subset))
                        .ok_or_else(|| fail(format!("subfile {subset} not cached")))?;
                    out.append(piece);
                    continue;
                }
                let s = subset.with(user);
                let mut piece = (*received
                    .get(&SegmentLabel::Subset(s))
                    .ok_or_else(|| fail(format!("no segment for {s}")))?)
                .clone();
                for j in s.members().filter(|&j| j != user) {
                    let known = mine
                        .get(&(demands.of(j), s.without(j)))
                        .ok_or_else(|| fail(format!("side information for {s} missing")))?;
                    piece.xor_padded(known);
                }
                if piece.len() != *subfile_bits {
                    return Err(fail(format!("segment {s} has wrong length")));
                }
                out.append(&piece);
            }
            Ok(out)
        }
    }
}

/// Worst-case rate comparison at corner `t`; ties go to the coded branch.
///
/// Coded delivery costs `(K-t)/(t+1)`, uncoded `min(N,K) (K-t)/K`, compared
/// here in integers.
pub fn choose_branch(users: usize, files: usize, t: usize) -> Branch {
    if t == users || users <= files.min(users) * (t + 1) {
        Branch::Coded
    } else {
        Branch::Uncoded
    }
}

/// A placed corner system: the server's copy of the library plus the caches.
#[derive(Debug, Clone)]
pub struct CentralizedSystem {
    users: usize,
    t: usize,
    branch: Branch,
    library: FileLibrary,
    partition: Option<SubfilePartition>,
    cache: CentralCacheState,
}

impl CentralizedSystem {
    /// Place at corner `t` using whichever branch has the smaller worst-case
    /// rate. The choice is made here because caches are filled before demands
    /// are known.
    pub fn place(library: &FileLibrary, users: usize, t: usize) -> Result<Self, SchemeError> {
        let branch = choose_branch(users, library.len(), t);
        Self::place_branch(library, users, t, branch)
    }

    pub fn place_branch(
        library: &FileLibrary,
        users: usize,
        t: usize,
        branch: Branch,
    ) -> Result<Self, SchemeError> {
        check_users(users)?;
        if t > users {
            return Err(SchemeError::Unsupported(format!("t = {t} > K = {users}")));
        }
        let (partition, cache) = match branch {
            Branch::Coded => {
                let p = SubfilePartition::split(library, users, t)?;
                let c = place_coded(&p);
                (Some(p), c)
            }
            Branch::Uncoded => {
                let prefix = t * library.file_bits() / users;
                (None, place_uncoded(library, users, prefix))
            }
        };
        Ok(Self {
            users,
            t,
            branch,
            library: library.clone(),
            partition,
            cache,
        })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn file_bits(&self) -> usize {
        self.library.file_bits()
    }

    pub fn cache(&self) -> &CentralCacheState {
        &self.cache
    }

    pub fn deliver(&self, demands: &DemandVector) -> Result<DeliveryTranscript, SchemeError> {
        demands.check_users(self.users)?;
        match &self.partition {
            Some(p) => Ok(deliver_centralized(p, demands)),
            None => deliver_uncoded(&self.library, &self.cache, demands),
        }
    }

    pub fn decode(
        &self,
        user: usize,
        transcript: &DeliveryTranscript,
        demands: &DemandVector,
    ) -> Result<BitString, SchemeError> {
        decode_centralized(user, &self.cache, transcript, demands)
    }
}

/// Place at the corner given by `params` and deliver with the branch of
/// smaller worst-case rate (ties to coded).
pub fn deliver_best_centralized(
    library: &FileLibrary,
    demands: &DemandVector,
    params: &SystemParams<f64>,
) -> Result<(CentralizedSystem, DeliveryTranscript), SchemeError> {
    let t = corner_index(params)?;
    let system = CentralizedSystem::place(library, params.users(), t)?;
    let transcript = system.deliver(demands)?;
    Ok((system, transcript))
}

/// One half of a memory-shared system: a corner system over a bit range of
/// every file. For the coded branch the range is spread over the `C(K, t)`
/// subfiles by a [`ChunkLayout`], so no user caches much more than its share
/// of real bits.
#[derive(Debug, Clone)]
pub struct SharedPart {
    pub start: usize,
    /// One chunk for the uncoded branch.
    pub layout: ChunkLayout,
    pub system: CentralizedSystem,
}

impl SharedPart {
    fn build(
        library: &FileLibrary,
        users: usize,
        t: usize,
        start: usize,
        len: usize,
        rotation: usize,
    ) -> Result<Self, SchemeError> {
        let branch = choose_branch(users, library.len(), t);
        let chunks = match branch {
            Branch::Coded => binomial(users, t) as usize,
            Branch::Uncoded => 1,
        };
        let layout = ChunkLayout { len, chunks, rotation };
        let sub = library.chunked(start, &layout);
        Ok(Self {
            start,
            layout,
            system: CentralizedSystem::place_branch(&sub, users, t, branch)?,
        })
    }

    pub fn real_bits(&self) -> usize {
        self.layout.len
    }

    /// Cached bits that belong to the real file range (padding excluded).
    fn cached_real_bits(&self, user: usize) -> usize {
        match self.system.cache() {
            CentralCacheState::Coded { contents, .. } => contents[user]
                .keys()
                .map(|&(n, subset)| self.layout.real(n, subset.colex_rank()))
                .sum(),
            CentralCacheState::Uncoded {
                prefix_bits,
                contents,
            } => contents[user].len() * prefix_bits,
        }
    }

    /// Drop the padding from a decoded range of file `n`.
    fn strip(&self, n: usize, padded: &BitString) -> BitString {
        let width = self.layout.width();
        let mut out = BitString::default();
        for r in 0..self.layout.chunks {
            out.append(&padded.slice(r * width, self.layout.real(n, r)));
        }
        out
    }
}

/// Memory sharing: a prefix of every file runs the corner scheme at `s - 1`,
/// the suffix at `s`.
#[derive(Debug, Clone)]
pub struct MemorySharedSystem {
    users: usize,
    file_bits: usize,
    s: usize,
    theta: f64,
    parts: Vec<SharedPart>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedTranscript {
    file_bits: usize,
    /// `(real bits, transcript)` per part, prefix first.
    pub parts: Vec<(usize, DeliveryTranscript)>,
}

impl SharedTranscript {
    /// Each part's rate weighted by its share of the file; padding bits of a
    /// part are discounted proportionally.
    pub fn measured_rate(&self) -> f64 {
        self.parts
            .iter()
            .map(|(real, t)| *real as f64 / self.file_bits as f64 * t.measured_rate())
            .sum()
    }

    pub fn total_bits(&self) -> usize {
        self.parts.iter().map(|(_, t)| t.total_bits()).sum()
    }
}

/// Bits assigned to the `s - 1` corner: `ceil(theta F)`, so that rounding
/// never pushes a user over `M F` cached bits. Values within `1e-9` of an
/// integer are snapped first.
pub fn shared_prefix_bits(file_bits: usize, theta: f64) -> usize {
    let exact = theta * file_bits as f64;
    let bits = if (exact - exact.round()).abs() < 1e-9 {
        exact.round()
    } else {
        exact.ceil()
    };
    (bits as usize).min(file_bits)
}

/// Place for general `M`. A corner memory (after snapping) degenerates to a
/// single part.
pub fn place_memory_shared(
    library: &FileLibrary,
    params: &SystemParams<f64>,
) -> Result<MemorySharedSystem, SchemeError> {
    let geo = params.geometry();
    let users = params.users();
    let f = library.file_bits();
    let prefix = if geo.is_corner() {
        0
    } else {
        shared_prefix_bits(f, geo.theta)
    };
    let mut parts: Vec<SharedPart> = Vec::with_capacity(2);
    if prefix > 0 {
        parts.push(SharedPart::build(library, users, geo.s - 1, 0, prefix, 0)?);
    }
    if prefix < f {
        // continue the long-chunk rotation where the prefix left off
        let rotation = parts.first().map_or(0, |p| p.layout.extra() * library.len());
        parts.push(SharedPart::build(library, users, geo.s, prefix, f - prefix, rotation)?);
    }
    Ok(MemorySharedSystem {
        users,
        file_bits: f,
        s: geo.s,
        theta: geo.theta,
        parts,
    })
}

impl MemorySharedSystem {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn parts(&self) -> &[SharedPart] {
        &self.parts
    }

    pub fn cached_bits(&self, user: usize) -> usize {
        self.parts.iter().map(|p| p.cached_real_bits(user)).sum()
    }

    pub fn deliver(&self, demands: &DemandVector) -> Result<SharedTranscript, SchemeError> {
        let parts = self
            .parts
            .iter()
            .map(|p| Ok((p.real_bits(), p.system.deliver(demands)?)))
            .collect::<Result<_, SchemeError>>()?;
        Ok(SharedTranscript {
            file_bits: self.file_bits,
            parts,
        })
    }

    pub fn decode(
        &self,
        user: usize,
        transcript: &SharedTranscript,
        demands: &DemandVector,
    ) -> Result<BitString, SchemeError> {
        if transcript.parts.len() != self.parts.len() {
            return Err(SchemeError::DecodeFailure {
                user,
                reason: "transcript does not match the placement".into(),
            });
        }
        let mut out = BitString::default();
        for (part, (real, t)) in self.parts.iter().zip(&transcript.parts) {
            debug_assert_eq!(*real, part.real_bits());
            out.append(&part.strip(demands.of(user), &part.system.decode(user, t, demands)?));
        }
        debug_assert_eq!(out.len(), self.file_bits);
        Ok(out)
    }
}

/// Rate the corner scheme must reach at `t`, in transmitted bits for files of
/// `file_bits` bits: `C(K,t+1) F / C(K,t)` coded, `min(N,K) (F - tF/K)` uncoded.
pub fn corner_worst_case_bits(users: usize, files: usize, t: usize, file_bits: usize) -> usize {
    match choose_branch(users, files, t) {
        Branch::Coded => {
            (binomial(users, t + 1) as usize) * (file_bits / binomial(users, t) as usize)
        }
        Branch::Uncoded => files.min(users) * (file_bits - t * file_bits / users),
    }
}

/// Analytic corner rate, for cross-checking simulated transcripts.
pub fn analytic_corner_rate(users: usize, files: usize, t: usize) -> f64 {
    let p = SystemParams::new(users, files, files as f64).expect("valid K, N");
    centralized_rate_corner(t, &p).expect("t <= K")
}
