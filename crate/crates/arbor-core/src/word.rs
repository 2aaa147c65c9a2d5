//! Reduced words in the free group, sphere enumeration, Gromov products,
//! Busemann values, and boundary rays.
//!
//! Letters are `0..2r`; letter `i` and letter `(i + r) mod 2r` are inverse to
//! each other. Words are freely reduced byte strings under that involution,
//! ordered lexicographically by letter index. A sphere of radius `n` holds
//! `2r(2r-1)^{n-1}` words; enumeration is streamed through a cursor that can
//! seek to any rank, so index ranges split into independent chunks.

use crate::context::GroupContext;
use crate::error::{ArborError, Result};

pub type Letter = u8;

/// Hard default cap on the number of words a single enumeration may touch.
pub const DEFAULT_ENUM_BUDGET: u128 = 100_000_000;

impl GroupContext {
    /// The letter inverse to `l`.
    #[inline]
    pub fn involute(&self, l: Letter) -> Letter {
        debug_assert!((l as usize) < self.alphabet_size());
        ((l as usize + self.rank()) % self.alphabet_size()) as Letter
    }
}

/// A freely reduced word, the address of a group element and of the boundary
/// cylinder of rays extending it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

fn check_reduced(ctx: &GroupContext, letters: &[Letter]) -> Result<()> {
    for &l in letters {
        if l as usize >= ctx.alphabet_size() {
            return Err(ArborError::pre(format!(
                "letter {l} out of range for rank {}",
                ctx.rank()
            )));
        }
    }
    for pair in letters.windows(2) {
        if pair[1] == ctx.involute(pair[0]) {
            return Err(ArborError::pre(format!(
                "word not reduced: letter {} followed by its inverse {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

impl ReducedWord {
    pub fn empty() -> Self {
        ReducedWord { letters: Vec::new() }
    }

    pub fn from_letters(ctx: &GroupContext, letters: impl Into<Vec<Letter>>) -> Result<Self> {
        let letters = letters.into();
        check_reduced(ctx, &letters)?;
        Ok(ReducedWord { letters })
    }

    /// Parses compact notation: `a..` for generators, `A..` for inverses,
    /// `e` or the empty string for the identity. Only for ranks up to 26.
    pub fn parse(ctx: &GroupContext, s: &str) -> Result<Self> {
        if s == "e" || s.is_empty() {
            return Ok(ReducedWord::empty());
        }
        let r = ctx.rank();
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let (base, inverse) = match c {
                'a'..='z' => ((c as usize) - ('a' as usize), false),
                'A'..='Z' => ((c as usize) - ('A' as usize), true),
                _ => {
                    return Err(ArborError::pre(format!("cannot parse letter {c:?}")));
                }
            };
            if base >= r {
                return Err(ArborError::pre(format!("letter {c:?} out of range for rank {r}")));
            }
            letters.push((base + if inverse { r } else { 0 }) as Letter);
        }
        ReducedWord::from_letters(ctx, letters)
    }

    /// Compact display, inverse of [`ReducedWord::parse`] for small ranks.
    pub fn display(&self, ctx: &GroupContext) -> String {
        if self.letters.is_empty() {
            return "e".to_string();
        }
        let r = ctx.rank();
        self.letters
            .iter()
            .map(|&l| {
                let l = l as usize;
                if l < r {
                    char::from(b'a' + l as u8)
                } else {
                    char::from(b'A' + (l - r) as u8)
                }
            })
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    #[inline]
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn inverse(&self, ctx: &GroupContext) -> ReducedWord {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|&l| ctx.involute(l))
            .collect();
        ReducedWord { letters }
    }

    /// Reduced product. Cancellation only happens at the junction, so the
    /// result is the surviving prefix of `self` joined to the surviving
    /// suffix of `other`.
    pub fn multiply(&self, ctx: &GroupContext, other: &ReducedWord) -> ReducedWord {
        let cancel = cancellation_len(ctx, &self.letters, &other.letters);
        let mut letters = Vec::with_capacity(self.len() + other.len() - 2 * cancel);
        letters.extend_from_slice(&self.letters[..self.len() - cancel]);
        letters.extend_from_slice(&other.letters[cancel..]);
        ReducedWord { letters }
    }

    pub fn prefix(&self, k: usize) -> ReducedWord {
        assert!(k <= self.len(), "prefix length exceeds word length");
        ReducedWord { letters: self.letters[..k].to_vec() }
    }

    /// Length of the longest common prefix; this is the Gromov product of
    /// the two group elements based at the identity.
    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        common_prefix(&self.letters, &other.letters)
    }

    /// Word distance `|g^{-1} h|`.
    pub fn distance(&self, other: &ReducedWord) -> usize {
        // On the tree: d(g,h) = |g| + |h| - 2 (g,h)_o.
        self.len() + other.len() - 2 * self.common_prefix_len(other)
    }
}

#[inline]
pub(crate) fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    let n = a.len().min(b.len());
    let mut m = 0;
    while m < n && a[m] == b[m] {
        m += 1;
    }
    m
}

fn cancellation_len(ctx: &GroupContext, a: &[Letter], b: &[Letter]) -> usize {
    let n = a.len().min(b.len());
    let mut c = 0;
    while c < n && b[c] == ctx.involute(a[a.len() - 1 - c]) {
        c += 1;
    }
    c
}

/// Gromov product of group elements via the metric formula
/// `((|g| + |h| - |g^{-1}h|) / 2`. Equal to the common-prefix length; kept as
/// an independent implementation for cross-checks.
pub fn gromov_product_metric(ctx: &GroupContext, g: &ReducedWord, h: &ReducedWord) -> usize {
    let d = g.inverse(ctx).multiply(ctx, h).len();
    debug_assert_eq!((g.len() + h.len() - d) % 2, 0);
    (g.len() + h.len() - d) / 2
}

/// Busemann value of the horofunction at any boundary point extending `u`,
/// evaluated on the orbit pair `(o, gamma o)`: equals `2m - |gamma|` with `m`
/// the common-prefix length. Requires `|u| >= |gamma|` so the value is
/// constant on the cylinder of `u`.
pub fn busemann_on_cylinder(u: &ReducedWord, gamma: &ReducedWord) -> Result<i64> {
    if u.len() < gamma.len() {
        return Err(ArborError::pre(format!(
            "cylinder level {} below |gamma| = {}; value not constant there",
            u.len(),
            gamma.len()
        )));
    }
    let m = u.common_prefix_len(gamma) as i64;
    Ok(2 * m - gamma.len() as i64)
}

/// An eventually periodic geodesic ray: `prefix . block . block . ...`,
/// freely reduced as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ray {
    prefix: ReducedWord,
    block: ReducedWord,
}

impl Ray {
    pub fn new(ctx: &GroupContext, prefix: ReducedWord, block: ReducedWord) -> Result<Self> {
        if block.is_empty() {
            return Err(ArborError::pre("ray block must be nonempty"));
        }
        // Reducedness of prefix.block.block checks both junctions.
        let mut probe = prefix.letters.clone();
        probe.extend_from_slice(&block.letters);
        probe.extend_from_slice(&block.letters);
        check_reduced(ctx, &probe)?;
        Ok(Ray { prefix, block })
    }

    /// The ray through `gamma` that repeats the last letter forever. This is
    /// the deterministic tie-break for the boundary extension of an orbit
    /// point: its Gromov product with `gamma o` equals `|gamma|`.
    pub fn hat(ctx: &GroupContext, gamma: &ReducedWord) -> Result<Ray> {
        let last = *gamma.letters.last().ok_or_else(|| {
            ArborError::pre("hat extension needs a nonempty word")
        })?;
        Ray::new(ctx, gamma.clone(), ReducedWord { letters: vec![last] })
    }

    pub fn base(&self) -> &ReducedWord {
        &self.prefix
    }

    /// First `k` letters of the infinite word.
    pub fn prefix_word(&self, k: usize) -> ReducedWord {
        let mut letters = Vec::with_capacity(k);
        let p = self.prefix.len().min(k);
        letters.extend_from_slice(&self.prefix.letters[..p]);
        let mut i = 0;
        while letters.len() < k {
            letters.push(self.block.letters[i % self.block.len()]);
            i += 1;
        }
        ReducedWord { letters }
    }
}

/// Streaming enumerator of the radius-`n` sphere in lexicographic order.
///
/// Seekable by rank: the word at rank `i` has first letter `i / (2r-1)^{n-1}`
/// and each later position the `(i / (2r-1)^{n-1-j}) mod (2r-1)`-th smallest
/// letter distinct from the inverse of its predecessor.
#[derive(Debug, Clone)]
pub struct SphereCursor {
    ctx: GroupContext,
    word: Vec<Letter>,
    done: bool,
}

impl SphereCursor {
    pub fn new(ctx: &GroupContext, n: usize) -> Self {
        SphereCursor::at_rank(ctx, n, 0)
    }

    /// Cursor positioned at the word of the given rank. `rank` must be below
    /// the sphere size.
    pub fn at_rank(ctx: &GroupContext, n: usize, rank: usize) -> Self {
        debug_assert!((rank as u128) < ctx.sphere_size(n));
        let b = ctx.branching();
        let mut word = vec![0 as Letter; n];
        if n > 0 {
            let mut rank = rank;
            let mut stride = b.pow((n - 1) as u32);
            word[0] = (rank / stride) as Letter;
            rank %= stride;
            for j in 1..n {
                stride /= b;
                let idx = rank / stride;
                rank %= stride;
                let forbidden = ctx.involute(word[j - 1]);
                word[j] = nth_allowed(idx, forbidden);
            }
        }
        SphereCursor { ctx: *ctx, word, done: false }
    }

    #[inline]
    pub fn current(&self) -> &[Letter] {
        debug_assert!(!self.done);
        &self.word
    }

    pub fn to_word(&self) -> ReducedWord {
        ReducedWord { letters: self.word.clone() }
    }

    /// Steps to the lexicographic successor; returns false once the sphere
    /// is exhausted.
    pub fn advance(&mut self) -> bool {
        if self.done || self.word.is_empty() {
            self.done = true;
            return false;
        }
        let n = self.word.len();
        let alphabet = self.ctx.alphabet_size() as Letter;
        let mut j = n;
        while j > 0 {
            j -= 1;
            let forbidden = if j == 0 {
                alphabet // no constraint on the first letter
            } else {
                self.ctx.involute(self.word[j - 1])
            };
            let mut next = self.word[j] + 1;
            if next == forbidden {
                next += 1;
            }
            if next < alphabet {
                self.word[j] = next;
                for i in j + 1..n {
                    let forbidden = self.ctx.involute(self.word[i - 1]);
                    self.word[i] = if forbidden == 0 { 1 } else { 0 };
                }
                return true;
            }
        }
        self.done = true;
        false
    }
}

#[inline]
fn nth_allowed(idx: usize, forbidden: Letter) -> Letter {
    if (idx as Letter) < forbidden {
        idx as Letter
    } else {
        idx as Letter + 1
    }
}

/// Rank of a length-`n` sphere word in lexicographic order.
pub fn sphere_rank(ctx: &GroupContext, word: &[Letter]) -> usize {
    let n = word.len();
    if n == 0 {
        return 0;
    }
    let b = ctx.branching();
    let mut rank = 0usize;
    let mut stride = b.pow((n - 1) as u32);
    rank += word[0] as usize * stride;
    for j in 1..n {
        stride /= b;
        let forbidden = ctx.involute(word[j - 1]);
        let idx = if word[j] < forbidden { word[j] } else { word[j] - 1 };
        rank += idx as usize * stride;
    }
    rank
}

/// Iterator over a sphere, yielding owned words. For tight loops prefer
/// [`SphereCursor`] directly.
#[derive(Debug)]
pub struct SphereIter {
    cursor: SphereCursor,
    remaining: usize,
}

impl Iterator for SphereIter {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if self.remaining == 0 {
            return None;
        }
        let word = self.cursor.to_word();
        self.remaining -= 1;
        if self.remaining > 0 {
            let stepped = self.cursor.advance();
            debug_assert!(stepped);
        }
        Some(word)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Lexicographic stream of all words of length `n`, refusing to start when
/// the sphere exceeds `budget` (default [`DEFAULT_ENUM_BUDGET`]).
pub fn enumerate_sphere(
    ctx: &GroupContext,
    n: usize,
    budget: Option<u128>,
) -> Result<SphereIter> {
    let size = ctx.sphere_size(n);
    let budget = budget.unwrap_or(DEFAULT_ENUM_BUDGET);
    if size > budget {
        return Err(ArborError::Budget { requested: size, budget });
    }
    Ok(SphereIter { cursor: SphereCursor::new(ctx, n), remaining: size as usize })
}

/// Least-squares slope of `log |B(o,n)|` against `n`, an estimate of the
/// critical exponent. Converges to `ln(2r-1)` as `n_max` grows.
///
/// The fit uses the upper half of the radius range: the limit is a limsup,
/// and the small-radius rows carry an O(1) offset that would bias the slope.
pub fn critical_exponent_estimate(ctx: &GroupContext, n_max: usize) -> Result<f64> {
    if n_max < 2 {
        return Err(ArborError::pre("need n_max >= 2 for a slope"));
    }
    let points: Vec<(f64, f64)> = (n_max / 2..=n_max)
        .map(|n| (n as f64, (ctx.ball_size(n) as f64).ln()))
        .collect();
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}
