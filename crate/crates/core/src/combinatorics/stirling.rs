use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::series::PowerSeries;
use super::{binomial, factorial, IdentityReport};
use crate::error::{Error, Result};

/// Signed first kind follows ln^m(1+z) = m! sum s(n,m) z^n/n!; second kind
/// follows (e^z - 1)^m = m! sum S(n,m) z^n/n!.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StirlingKind {
    FirstSigned,
    Second,
}

impl fmt::Display for StirlingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StirlingKind::FirstSigned => "first-signed",
            StirlingKind::Second => "second",
        })
    }
}

impl FromStr for StirlingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "first-signed" => Ok(StirlingKind::FirstSigned),
            "second" => Ok(StirlingKind::Second),
            other => Err(Error::Parse(format!("unknown Stirling kind {other:?}"))),
        }
    }
}

/// Triangular table of Stirling numbers, rows 0..=max_n, row n holding k = 0..=n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StirlingTable {
    kind: StirlingKind,
    rows: Vec<Vec<Integer>>,
}

const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheDocument {
    version: u32,
    kind: StirlingKind,
    max_n: usize,
    rows: Vec<Vec<String>>,
}

impl StirlingTable {
    pub fn new(kind: StirlingKind) -> Self {
        StirlingTable {
            kind,
            rows: vec![vec![Integer::from(1)]],
        }
    }

    pub fn build(kind: StirlingKind, max_n: usize) -> Self {
        let mut t = Self::new(kind);
        t.extend_to(max_n);
        t
    }

    pub fn kind(&self) -> StirlingKind {
        self.kind
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    fn next_row(kind: StirlingKind, prev: &[Integer]) -> Vec<Integer> {
        let n = prev.len() - 1;
        let mut row = vec![Integer::new(); n + 2];
        for k in 1..=n + 1 {
            let left = &prev[k - 1];
            let same = prev.get(k).cloned().unwrap_or_default();
            row[k] = match kind {
                // s(n+1,k) = s(n,k-1) - n s(n,k)
                StirlingKind::FirstSigned => Integer::from(left - Integer::from(&same * n as u64)),
                // S(n+1,k) = k S(n,k) + S(n,k-1)
                StirlingKind::Second => Integer::from(&same * k as u64) + left,
            };
        }
        row
    }

    pub fn extend_to(&mut self, max_n: usize) {
        while self.max_n() < max_n {
            let row = Self::next_row(self.kind, self.rows.last().expect("row 0 always present"));
            self.rows.push(row);
        }
    }

    /// Entry (n, k); zero for k > n. Panics if n is beyond the table.
    pub fn get(&self, n: usize, k: usize) -> Integer {
        if k > n {
            return Integer::new();
        }
        self.rows[n][k].clone()
    }

    pub fn row(&self, n: usize) -> &[Integer] {
        &self.rows[n]
    }

    /// Checks boundary values and the recurrence on every row.
    pub fn validate(&self) -> Result<()> {
        if self.rows.first().map(|r| r.as_slice()) != Some(&[Integer::from(1)][..]) {
            return Err(Error::Cache("row 0 must be [1]".into()));
        }
        for n in 1..self.rows.len() {
            let row = &self.rows[n];
            if row.len() != n + 1 {
                return Err(Error::Cache(format!("row {n} has {} entries, expected {}", row.len(), n + 1)));
            }
            if *row != Self::next_row(self.kind, &self.rows[n - 1]) {
                return Err(Error::Cache(format!("row {n} violates the {} recurrence", self.kind)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = CacheDocument {
            version: CACHE_FORMAT_VERSION,
            kind: self.kind,
            max_n: self.max_n(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Integer::to_string).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("cache document serializes")
    }

    /// Parse and validate a cache document; any malformed or inconsistent row rejects the file.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CacheDocument =
            serde_json::from_str(text).map_err(|e| Error::Cache(format!("malformed document: {e}")))?;
        if doc.version != CACHE_FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported version {}", doc.version)));
        }
        if doc.rows.len() != doc.max_n + 1 {
            return Err(Error::Cache(format!(
                "max_n = {} but {} rows present",
                doc.max_n,
                doc.rows.len()
            )));
        }
        let rows = doc
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| s.parse::<Integer>().map_err(|_| Error::Cache(format!("bad integer {s:?}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let table = StirlingTable { kind: doc.kind, rows };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))
    }
}

/// Process-wide tables for both kinds. Rows are only ever appended, under the
/// write lock, so readers never observe a partially built row.
#[derive(Debug)]
pub struct StirlingCache {
    first: RwLock<StirlingTable>,
    second: RwLock<StirlingTable>,
}

impl Default for StirlingCache {
    fn default() -> Self {
        Self::new()
    }
}

impl StirlingCache {
    pub fn new() -> Self {
        StirlingCache {
            first: RwLock::new(StirlingTable::new(StirlingKind::FirstSigned)),
            second: RwLock::new(StirlingTable::new(StirlingKind::Second)),
        }
    }

    fn slot(&self, kind: StirlingKind) -> &RwLock<StirlingTable> {
        match kind {
            StirlingKind::FirstSigned => &self.first,
            StirlingKind::Second => &self.second,
        }
    }

    pub fn get(&self, kind: StirlingKind, n: usize, k: usize) -> Integer {
        if k > n {
            return Integer::new();
        }
        {
            let t = self.slot(kind).read().expect("stirling cache poisoned");
            if n <= t.max_n() {
                return t.get(n, k);
            }
        }
        let mut t = self.slot(kind).write().expect("stirling cache poisoned");
        t.extend_to(n);
        t.get(n, k)
    }

    pub fn max_n(&self, kind: StirlingKind) -> usize {
        self.slot(kind).read().expect("stirling cache poisoned").max_n()
    }

    pub fn snapshot(&self, kind: StirlingKind) -> StirlingTable {
        self.slot(kind).read().expect("stirling cache poisoned").clone()
    }

    /// Adopt a (validated) table if it extends the cached one.
    pub fn install(&self, table: StirlingTable) -> Result<()> {
        table.validate()?;
        let mut t = self.slot(table.kind()).write().expect("stirling cache poisoned");
        if table.max_n() > t.max_n() {
            *t = table;
        }
        Ok(())
    }
}

/// What happened to one on-disk table during [`StirlingCache::sync_dir`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum CacheOutcome {
    Loaded { max_n: usize },
    Rebuilt { reason: String },
    Created,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CacheStatus {
    pub kind: StirlingKind,
    pub path: String,
    #[serde(flatten)]
    pub outcome: CacheOutcome,
}

pub fn cache_file_name(kind: StirlingKind) -> String {
    format!("stirling-{kind}.json")
}

impl StirlingCache {
    /// Loads `dir/stirling-<kind>.json` for both kinds. A file that fails
    /// validation is rejected, rebuilt from the recurrence and rewritten; the
    /// stored tables hold at least `min_n` rows afterwards.
    pub fn sync_dir(&self, dir: &Path, min_n: usize) -> Result<Vec<CacheStatus>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Cache(format!("{}: {e}", dir.display())))?;
        let mut out = Vec::new();
        for kind in [StirlingKind::FirstSigned, StirlingKind::Second] {
            let path = dir.join(cache_file_name(kind));
            let outcome = if path.exists() {
                match StirlingTable::load(&path) {
                    Ok(t) if t.kind() == kind => {
                        let max_n = t.max_n();
                        self.install(t)?;
                        CacheOutcome::Loaded { max_n }
                    }
                    Ok(t) => CacheOutcome::Rebuilt {
                        reason: format!("file holds the {} kind", t.kind()),
                    },
                    Err(e) => CacheOutcome::Rebuilt { reason: e.to_string() },
                }
            } else {
                CacheOutcome::Created
            };
            let current = self.max_n(kind);
            if !matches!(outcome, CacheOutcome::Loaded { max_n } if max_n >= min_n) {
                {
                    let mut t = self.slot(kind).write().expect("stirling cache poisoned");
                    t.extend_to(current.max(min_n));
                }
                self.snapshot(kind).save(&path)?;
            }
            out.push(CacheStatus {
                kind,
                path: path.display().to_string(),
                outcome,
            });
        }
        Ok(out)
    }
}

pub fn stirling_cache() -> &'static StirlingCache {
    static CACHE: OnceLock<StirlingCache> = OnceLock::new();
    CACHE.get_or_init(StirlingCache::new)
}

/// s(n,k) (signed) or S(n,k) from the shared cache.
pub fn stirling(kind: StirlingKind, n: usize, k: usize) -> Integer {
    stirling_cache().get(kind, n, k)
}

/// Compares the recurrence-built tables with exact power-series expansions of
/// their generating functions, and checks the finite-difference/derivative
/// inversion formulas on f(z) = e^{az} (where both sides reduce to those
/// generating functions, expanded here by independent routes).
pub fn gf_coefficient_check(kind: StirlingKind, m: usize, order: usize) -> Result<IdentityReport> {
    if m == 0 || order < m {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= order, got m={m}, order={order}")));
    }
    let mfact = Rational::from(factorial(m as u64));
    let target = |n: usize| -> Rational {
        Rational::from((stirling(kind, n, m), factorial(n as u64))) * &mfact
    };
    let fail = |identity: &str, n: usize| Error::identity(identity, format!("(n={n}, m={m})"));

    let mut cases = 0;
    match kind {
        StirlingKind::Second => {
            let gf = PowerSeries::exp_minus_one(1, order).pow(m as u32);
            for n in 0..=order {
                if *gf.coeff(n) != target(n) {
                    return Err(fail("second-kind generating function", n));
                }
                // Delta^m e^{az} / e^{az} = sum_k C(m,k)(-1)^{m-k} e^{ak}; a^n coefficient
                let mut delta = Integer::new();
                for k in 0..=m {
                    let term = binomial(m as u64, k as u64) * Integer::from(Integer::u_pow_u(k as u32, n as u32));
                    if (m - k) % 2 == 0 {
                        delta += term;
                    } else {
                        delta -= term;
                    }
                }
                if Rational::from((delta, factorial(n as u64))) != target(n) {
                    return Err(fail("forward difference of e^(az)", n));
                }
                cases += 2;
            }
        }
        StirlingKind::FirstSigned => {
            let gf = PowerSeries::log_one_plus(order).pow(m as u32);
            for n in 0..=order {
                if *gf.coeff(n) != target(n) {
                    return Err(fail("first-kind generating function", n));
                }
                cases += 1;
            }
            // a^m = m! sum_{n>=m} s(n,m)/n! (e^a - 1)^n; exact through a^order
            let u = PowerSeries::exp_minus_one(1, order);
            let mut un = u.pow(m as u32);
            let mut rhs = PowerSeries::zero(order);
            for n in m..=order {
                rhs = rhs.add(&un.scale(&target(n)));
                un = un.mul(&u);
            }
            let lhs = PowerSeries::monomial(m, order);
            if let Some(n) = (0..=order).find(|&n| lhs.coeff(n) != rhs.coeff(n)) {
                return Err(fail("derivative as series of forward differences", n));
            }
            cases += 1;
        }
    }
    Ok(IdentityReport {
        identity: match kind {
            StirlingKind::FirstSigned => "ln^m(1+z) generating function",
            StirlingKind::Second => "(e^z-1)^m generating function",
        },
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::bell_numbers;

    #[test]
    fn examples() {
        assert_eq!(stirling(StirlingKind::FirstSigned, 3, 2), -3);
        assert_eq!(stirling(StirlingKind::FirstSigned, 4, 2), 11);
        assert_eq!(stirling(StirlingKind::Second, 4, 2), 7);
        for n in 1..30 {
            assert_eq!(stirling(StirlingKind::Second, n, 1), 1);
        }
    }

    /// Coefficients of the falling factorial x(x-1)...(x-n+1) by direct expansion.
    fn falling_factorial_coeffs(n: usize) -> Vec<Integer> {
        let mut poly = vec![Integer::from(1)];
        for j in 0..n {
            let mut next = vec![Integer::new(); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= Integer::from(c * j as u64);
            }
            poly = next;
        }
        poly
    }

    /// Partitions of an n-set into k blocks, enumerated as restricted growth strings.
    fn count_partitions(n: usize, k: usize) -> u64 {
        fn rec(pos: usize, n: usize, max: usize, k: usize) -> u64 {
            if pos == n {
                return u64::from(max == k);
            }
            (0..=max.min(k - 1))
                .map(|b| rec(pos + 1, n, max.max(b + 1), k))
                .sum()
        }
        if n == 0 {
            return u64::from(k == 0);
        }
        if k == 0 {
            return 0;
        }
        rec(1, n, 1, k)
    }

    #[test]
    fn matches_independent_oracles() {
        for n in 0..=10 {
            let poly = falling_factorial_coeffs(n);
            for k in 0..=n {
                assert_eq!(stirling(StirlingKind::FirstSigned, n, k), poly[k], "s({n},{k})");
                assert_eq!(stirling(StirlingKind::Second, n, k), count_partitions(n, k), "S({n},{k})");
            }
        }
    }

    #[test]
    fn table_invariants_to_twenty() {
        let first = StirlingTable::build(StirlingKind::FirstSigned, 20);
        let second = StirlingTable::build(StirlingKind::Second, 20);
        let bells = bell_numbers(20);
        for n in 0..=20 {
            assert_eq!(first.get(n, n), 1);
            assert_eq!(second.get(n, n), 1);
            if n >= 1 {
                assert_eq!(first.get(n, 0), 0);
                assert_eq!(second.get(n, 0), 0);
            }
            assert_eq!(first.get(n, n + 3), 0);
            let unsigned: Integer = first.row(n).iter().map(|v| Integer::from(v.abs_ref())).sum();
            assert_eq!(unsigned, factorial(n as u64));
            let total: Integer = second.row(n).iter().sum();
            assert_eq!(total, bells[n]);
        }
        first.validate().unwrap();
        second.validate().unwrap();
    }

    #[test]
    fn gf_examples() {
        gf_coefficient_check(StirlingKind::FirstSigned, 2, 3).unwrap();
        gf_coefficient_check(StirlingKind::Second, 2, 3).unwrap();
        gf_coefficient_check(StirlingKind::FirstSigned, 1, 1).unwrap();
        assert!(gf_coefficient_check(StirlingKind::Second, 3, 2).is_err());
    }

    #[test]
    fn gf_full_range() {
        for m in 1..=6 {
            for kind in [StirlingKind::FirstSigned, StirlingKind::Second] {
                gf_coefficient_check(kind, m, 25).unwrap();
            }
        }
    }

    #[test]
    fn cache_round_trip_and_rejection() {
        let t = StirlingTable::build(StirlingKind::Second, 12);
        let back = StirlingTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);

        let corrupted = t.to_json().replace("\"7\"", "\"8\"");
        assert!(matches!(StirlingTable::from_json(&corrupted), Err(Error::Cache(_))));
        assert!(StirlingTable::from_json("{not json").is_err());
        let wrong_len = t.to_json().replace("\"max_n\":12", "\"max_n\":13");
        assert!(StirlingTable::from_json(&wrong_len).is_err());
    }

    #[test]
    fn cache_grows_monotonically() {
        let cache = StirlingCache::new();
        assert_eq!(cache.max_n(StirlingKind::Second), 0);
        assert_eq!(cache.get(StirlingKind::Second, 9, 3), 3025);
        assert_eq!(cache.max_n(StirlingKind::Second), 9);
        cache.get(StirlingKind::Second, 4, 2);
        assert_eq!(cache.max_n(StirlingKind::Second), 9);
        cache.install(StirlingTable::build(StirlingKind::Second, 5)).unwrap();
        assert_eq!(cache.max_n(StirlingKind::Second), 9);
        cache.install(StirlingTable::build(StirlingKind::Second, 15)).unwrap();
        assert_eq!(cache.max_n(StirlingKind::Second), 15);
    }

    #[test]
    fn sync_dir_creates_loads_and_rebuilds() {
        let dir = tempfile::tempdir().unwrap();
        let cache = StirlingCache::new();
        let st = cache.sync_dir(dir.path(), 10).unwrap();
        assert!(st.iter().all(|s| s.outcome == CacheOutcome::Created));

        let fresh = StirlingCache::new();
        let st = fresh.sync_dir(dir.path(), 10).unwrap();
        assert!(st.iter().all(|s| s.outcome == CacheOutcome::Loaded { max_n: 10 }));
        assert_eq!(fresh.max_n(StirlingKind::FirstSigned), 10);

        let path = dir.path().join(cache_file_name(StirlingKind::Second));
        let text = std::fs::read_to_string(&path).unwrap().replace("\"7\"", "\"8\"");
        std::fs::write(&path, text).unwrap();
        let st = StirlingCache::new().sync_dir(dir.path(), 10).unwrap();
        assert!(matches!(st[1].outcome, CacheOutcome::Rebuilt { .. }));
        assert_eq!(StirlingTable::load(&path).unwrap(), StirlingTable::build(StirlingKind::Second, 10));
    }
}
