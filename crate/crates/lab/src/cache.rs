//! On-disk reference-solution cache keyed by a hash of the instance spec.
//!
//! Entries are written to a temporary file in the cache directory and renamed
//! into place, so concurrent writers of the same key never expose a partial
//! file.

use std::io::Write;
use std::path::{Path, PathBuf};

use pigd_core::library::{attach_reference, make_instance_uncertified, reference_for, InstanceSpec};
use pigd_core::reference::{ReferenceSolution, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use pigd_core::CompositeProblem;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Result};

const CACHE_FORMAT: u32 = 1;

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: u32,
    instance: &'a InstanceSpec,
    tol: f64,
    max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    instance: InstanceSpec,
    solution: ReferenceSolution,
}

/// Where `F*` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    ClosedForm,
    Cache,
    Solved,
}

#[derive(Debug, Clone)]
pub struct Certified {
    pub problem: CompositeProblem,
    /// `None` for closed-form instances.
    pub key: Option<String>,
    pub source: ReferenceSource,
    pub solution: Option<ReferenceSolution>,
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the canonical JSON of the spec and solver accuracy.
    pub fn key(spec: &InstanceSpec) -> String {
        let material = KeyMaterial {
            format: CACHE_FORMAT,
            instance: spec,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        };
        let bytes = serde_json::to_vec(&material).expect("instance specs serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Builds the instance, attaching `F*` from the cache or a fresh solve.
    pub fn certify(&self, spec: &InstanceSpec) -> Result<Certified> {
        let problem = make_instance_uncertified(spec)?;
        if problem.f_star().is_some() {
            return Ok(Certified {
                problem,
                key: None,
                source: ReferenceSource::ClosedForm,
                solution: None,
            });
        }
        let key = Self::key(spec);
        let (solution, source) = match self.lookup(&key, spec) {
            Some(solution) => (solution, ReferenceSource::Cache),
            None => {
                let solution = reference_for(&problem)?;
                self.store(&key, spec, &solution)?;
                (solution, ReferenceSource::Solved)
            }
        };
        Ok(Certified {
            problem: attach_reference(spec, problem, &solution),
            key: Some(key),
            source,
            solution: Some(solution),
        })
    }

    /// A readable entry for exactly this spec; anything else counts as a miss.
    fn lookup(&self, key: &str, spec: &InstanceSpec) -> Option<ReferenceSolution> {
        let text = std::fs::read_to_string(self.entry_path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == key && &entry.instance == spec).then_some(entry.solution)
    }

    fn store(&self, key: &str, spec: &InstanceSpec, solution: &ReferenceSolution) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(io_err(format!("creating {}", self.dir.display())))?;
        let entry = CacheEntry {
            key: key.to_owned(),
            instance: spec.clone(),
            solution: solution.clone(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .map_err(io_err(format!("creating temp file in {}", self.dir.display())))?;
        serde_json::to_writer_pretty(&mut tmp, &entry)?;
        tmp.write_all(b"\n").map_err(io_err("writing cache entry"))?;
        let target = self.entry_path(key);
        tmp.persist(&target)
            .map_err(|e| e.error)
            .map_err(io_err(format!("replacing {}", target.display())))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pigd_core::library::ProblemKind;

    #[test]
    fn key_depends_on_every_field() {
        let base = InstanceSpec::new(ProblemKind::Lasso, 8);
        let k = ReferenceCache::key(&base);
        assert_eq!(k.len(), 64);
        assert_eq!(k, ReferenceCache::key(&base.clone()));
        for other in [
            base.clone().with_seed(1),
            base.clone().with_rows(9),
            base.clone().with_lambda(0.2),
            base.clone().with_blocks(2),
        ] {
            assert_ne!(k, ReferenceCache::key(&other));
        }
    }

    #[test]
    fn second_lookup_hits_and_agrees_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let spec = InstanceSpec::new(ProblemKind::Lasso, 6).with_seed(3);
        let first = cache.certify(&spec).unwrap();
        assert_eq!(first.source, ReferenceSource::Solved);
        let second = cache.certify(&spec).unwrap();
        assert_eq!(second.source, ReferenceSource::Cache);
        assert_eq!(first.solution, second.solution);
        assert_eq!(
            first.problem.f_star().unwrap().to_bits(),
            second.problem.f_star().unwrap().to_bits()
        );
    }

    #[test]
    fn corrupt_entry_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let spec = InstanceSpec::new(ProblemKind::LogisticL1, 4).with_seed(1);
        let key = ReferenceCache::key(&spec);
        std::fs::write(cache.entry_path(&key), "{ not json").unwrap();
        let got = cache.certify(&spec).unwrap();
        assert_eq!(got.source, ReferenceSource::Solved);
        assert_eq!(cache.certify(&spec).unwrap().source, ReferenceSource::Cache);
    }

    #[test]
    fn closed_form_instances_skip_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path().join("never"));
        let got = cache.certify(&InstanceSpec::new(ProblemKind::Quadratic, 4)).unwrap();
        assert_eq!(got.source, ReferenceSource::ClosedForm);
        assert!(got.key.is_none());
        assert!(!cache.dir().exists());
    }
}
