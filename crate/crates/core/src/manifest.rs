//! Component registry and the system integrity predicate.
//!
//! Every module of the workbench is described by a [`ComponentManifest`]:
//! the tier it lives in, the interfaces it provides and requires, and the
//! catalogue functions (`S1`..`S31`) it implements. A [`Registry`] of
//! manifests is valid when every requirement resolves, no tier talks past
//! its neighbour, and every catalogue function is claimed exactly once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("MALFORMED_MANIFEST: {0}")]
    Malformed(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Presentation,
    Logic,
    Data,
}

impl Tier {
    fn level(self) -> i8 {
        match self {
            Tier::Presentation => 0,
            Tier::Logic => 1,
            Tier::Data => 2,
        }
    }

    /// Tiers may depend on each other in both directions, but only when adjacent.
    pub fn may_depend_on(self, other: Tier) -> bool {
        (self.level() - other.level()).abs() <= 1
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Presentation => "presentation",
            Tier::Logic => "logic",
            Tier::Data => "data",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentManifest {
    pub name: String,
    pub tier: Tier,
    #[serde(default)]
    pub provided: BTreeSet<String>,
    #[serde(default)]
    pub required: BTreeSet<String>,
    #[serde(default)]
    pub functions: BTreeSet<String>,
}

impl ComponentManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.name.trim().is_empty() {
            return Err(ManifestError::Malformed("component name is empty".into()));
        }
        let overlap: Vec<_> = self.provided.intersection(&self.required).cloned().collect();
        if !overlap.is_empty() {
            return Err(ManifestError::Malformed(format!(
                "{}: interfaces both provided and required: {}",
                self.name,
                overlap.join(", ")
            )));
        }
        if let Some(bad) = self
            .provided
            .iter()
            .chain(&self.required)
            .find(|i| i.trim().is_empty())
        {
            return Err(ManifestError::Malformed(format!(
                "{}: empty interface identifier {bad:?}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let m: ComponentManifest =
            serde_json::from_str(text).map_err(|e| ManifestError::Malformed(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub description: String,
    pub owner: String,
}

/// The fixed list of system functions, keyed `S1`..`S31`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCatalogue {
    pub entries: BTreeMap<String, CatalogueEntry>,
}

impl FunctionCatalogue {
    pub const SHIPPED_SIZE: usize = 31;

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let c: FunctionCatalogue =
            serde_json::from_str(text).map_err(|e| ManifestError::Malformed(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        for (id, e) in &self.entries {
            if e.owner.trim().is_empty() {
                return Err(ManifestError::Malformed(format!("function {id} has no owner")));
            }
        }
        Ok(())
    }

    pub fn shipped() -> Self {
        Self::from_json(include_str!("../manifests/catalogue.json"))
            .expect("shipped catalogue is well-formed")
    }

    /// Function ids in numeric order (`S2` before `S10`).
    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        ids.sort_by_key(|id| function_ordinal(id));
        ids
    }
}

fn function_ordinal(id: &str) -> (u32, String) {
    let n = id
        .strip_prefix('S')
        .and_then(|n| n.parse().ok())
        .unwrap_or(u32::MAX);
    (n, id.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    UnresolvedRequirement,
    DuplicateFunction,
    LayeringViolation,
    UnmappedFunction,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl IntegrityReport {
    fn finish(mut violations: Vec<Violation>, warnings: Vec<String>) -> Self {
        violations.sort();
        violations.dedup();
        IntegrityReport {
            valid: violations.is_empty(),
            violations,
            warnings,
        }
    }

    /// Combine two reports; the result is valid only if both are.
    pub fn merge(self, other: IntegrityReport) -> IntegrityReport {
        let mut v = self.violations;
        v.extend(other.violations);
        let mut w = self.warnings;
        w.extend(other.warnings);
        IntegrityReport::finish(v, w)
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

/// Immutable-after-startup set of component manifests keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    components: BTreeMap<String, ComponentManifest>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or replace (by name) a manifest.
    pub fn register(&mut self, manifest: ComponentManifest) -> Result<(), ManifestError> {
        manifest.validate()?;
        self.components.insert(manifest.name.clone(), manifest);
        Ok(())
    }

    pub fn with(mut self, manifest: ComponentManifest) -> Result<Self, ManifestError> {
        self.register(manifest)?;
        Ok(self)
    }

    pub fn remove(&mut self, name: &str) -> Option<ComponentManifest> {
        self.components.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&ComponentManifest> {
        self.components.get(name)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentManifest> {
        self.components.values()
    }

    /// The eight shipped module manifests.
    pub fn shipped() -> Self {
        let mut r = Registry::new();
        for text in SHIPPED_MANIFESTS {
            r.register(ComponentManifest::from_json(text).expect("shipped manifest is well-formed"))
                .expect("shipped manifest is valid");
        }
        r
    }

    /// Load every `*.json` manifest in a directory, skipping `catalogue.json`.
    pub fn load_dir(dir: &Path) -> Result<Self, ManifestError> {
        let io = |source| ManifestError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter(|p| p.file_name().is_some_and(|n| n != "catalogue.json"))
            .collect();
        paths.sort();
        let mut r = Registry::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|source| ManifestError::Io {
                path: p.display().to_string(),
                source,
            })?;
            r.register(ComponentManifest::from_json(&text)?)?;
        }
        Ok(r)
    }

    fn providers(&self) -> BTreeMap<&str, Vec<&ComponentManifest>> {
        let mut map: BTreeMap<&str, Vec<&ComponentManifest>> = BTreeMap::new();
        for c in self.components.values() {
            for i in &c.provided {
                map.entry(i.as_str()).or_default().push(c);
            }
        }
        map
    }

    /// Interface resolution and tier layering.
    pub fn validate_integrity(&self) -> IntegrityReport {
        let mut violations = Vec::new();
        let mut warnings = Vec::new();
        if self.components.is_empty() {
            warnings.push("empty registry".to_string());
        }
        let providers = self.providers();
        for c in self.components.values() {
            for req in &c.required {
                match providers.get(req.as_str()) {
                    None => violations.push(Violation {
                        kind: ViolationKind::UnresolvedRequirement,
                        subject: format!("{}:{req}", c.name),
                        detail: format!("{} requires {req}, which no component provides", c.name),
                    }),
                    Some(ps) if !ps.iter().any(|p| c.tier.may_depend_on(p.tier)) => {
                        let tiers: BTreeSet<String> =
                            ps.iter().map(|p| p.tier.to_string()).collect();
                        violations.push(Violation {
                            kind: ViolationKind::LayeringViolation,
                            subject: format!("{}:{req}", c.name),
                            detail: format!(
                                "{} ({} tier) requires {req}, provided only by the {} tier",
                                c.name,
                                c.tier,
                                tiers.into_iter().collect::<Vec<_>>().join("/")
                            ),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
        IntegrityReport::finish(violations, warnings)
    }

    /// Every catalogue function claimed by exactly one component.
    pub fn compose_function_map(&self, catalogue: &FunctionCatalogue) -> IntegrityReport {
        let mut violations = Vec::new();
        let mut warnings = Vec::new();
        let mut claims: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for c in self.components.values() {
            for f in &c.functions {
                claims.entry(f.as_str()).or_default().push(c.name.as_str());
                match catalogue.entries.get(f) {
                    None => warnings.push(format!("{} claims {f}, which is not in the catalogue", c.name)),
                    Some(e) if e.owner != c.name => warnings.push(format!(
                        "{} claims {f}, catalogued under {}",
                        c.name, e.owner
                    )),
                    Some(_) => {}
                }
            }
        }
        for id in catalogue.ids() {
            match claims.get(id).map(Vec::as_slice) {
                None | Some([]) => violations.push(Violation {
                    kind: ViolationKind::UnmappedFunction,
                    subject: id.to_string(),
                    detail: format!("{id} is not claimed by any component"),
                }),
                Some([_]) => {}
                Some(owners) => violations.push(Violation {
                    kind: ViolationKind::DuplicateFunction,
                    subject: id.to_string(),
                    detail: format!("{id} claimed by {}", owners.join(", ")),
                }),
            }
        }
        IntegrityReport::finish(violations, warnings)
    }

    /// Function id -> owning component, for the claimed subset of the catalogue.
    pub fn function_map(&self) -> BTreeMap<String, Vec<String>> {
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in self.components.values() {
            for f in &c.functions {
                map.entry(f.clone()).or_default().push(c.name.clone());
            }
        }
        map
    }

    /// Full integrity check: interface resolution, layering and function coverage.
    pub fn check(&self, catalogue: &FunctionCatalogue) -> IntegrityReport {
        self.validate_integrity()
            .merge(self.compose_function_map(catalogue))
    }
}

const SHIPPED_MANIFESTS: [&str; 8] = [
    include_str!("../manifests/mugo.json"),
    include_str!("../manifests/mptd.json"),
    include_str!("../manifests/mipti.json"),
    include_str!("../manifests/mlatd.json"),
    include_str!("../manifests/mpo.json"),
    include_str!("../manifests/mvpos.json"),
    include_str!("../manifests/mubdz.json"),
    include_str!("../manifests/mbd.json"),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn m(name: &str, tier: Tier, provided: &[&str], required: &[&str], functions: &[&str]) -> ComponentManifest {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        ComponentManifest {
            name: name.into(),
            tier,
            provided: set(provided),
            required: set(required),
            functions: set(functions),
        }
    }

    #[test]
    fn register_into_empty_registry() {
        let mut r = Registry::new();
        r.register(m("МБД", Tier::Data, &["kv.get"], &[], &["S25"])).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn reregister_replaces_by_name() {
        let mut r = Registry::new();
        r.register(m("МБД", Tier::Data, &["kv.get"], &[], &["S25"])).unwrap();
        r.register(m("МБД", Tier::Data, &["kv.get", "kv.put"], &[], &["S25"])).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.get("МБД").unwrap().provided.contains("kv.put"));
    }

    #[test]
    fn provided_and_required_overlap_is_malformed() {
        let mut r = Registry::new();
        let err = r
            .register(m("X", Tier::Logic, &["a"], &["a"], &[]))
            .unwrap_err();
        assert!(matches!(err, ManifestError::Malformed(_)));
        assert!(r.is_empty());
    }

    #[test]
    fn unknown_tier_is_rejected() {
        let err = ComponentManifest::from_json(r#"{"name":"X","tier":"middle"}"#).unwrap_err();
        assert!(matches!(err, ManifestError::Malformed(_)));
    }

    #[test]
    fn empty_registry_is_vacuously_valid() {
        let rep = Registry::new().validate_integrity();
        assert!(rep.valid);
        assert_eq!(rep.warnings, vec!["empty registry".to_string()]);
    }

    #[test]
    fn shipped_registry_is_valid() {
        let r = Registry::shipped();
        assert_eq!(r.len(), 8);
        let rep = r.validate_integrity();
        assert!(rep.valid, "{:?}", rep.violations);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn presentation_to_data_is_layering_violation() {
        let r = Registry::shipped()
            .with(m("cli", Tier::Presentation, &[], &["kv.get"], &[]))
            .unwrap();
        let rep = r.validate_integrity();
        assert!(!rep.valid);
        let v: Vec<_> = rep.of_kind(ViolationKind::LayeringViolation).collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].subject, "cli:kv.get");
    }

    #[test]
    fn data_to_presentation_is_layering_violation() {
        let r = Registry::new()
            .with(m("ui", Tier::Presentation, &["ui.x"], &[], &[]))
            .unwrap()
            .with(m("db", Tier::Data, &[], &["ui.x"], &[]))
            .unwrap();
        let rep = r.validate_integrity();
        assert_eq!(rep.of_kind(ViolationKind::LayeringViolation).count(), 1);
    }

    #[test]
    fn interface_also_offered_by_logic_tier_is_fine() {
        let r = Registry::new()
            .with(m("ui", Tier::Presentation, &[], &["x"], &[]))
            .unwrap()
            .with(m("db", Tier::Data, &["x"], &[], &[]))
            .unwrap()
            .with(m("app", Tier::Logic, &["x"], &[], &[]))
            .unwrap();
        assert!(r.validate_integrity().valid);
    }

    #[test]
    fn shipped_catalogue_has_31_owned_entries() {
        let c = FunctionCatalogue::shipped();
        assert_eq!(c.entries.len(), FunctionCatalogue::SHIPPED_SIZE);
        assert_eq!(c.ids().first(), Some(&"S1"));
        assert_eq!(c.ids().last(), Some(&"S31"));
    }

    #[test]
    fn full_registry_maps_all_functions() {
        let rep = Registry::shipped().compose_function_map(&FunctionCatalogue::shipped());
        assert!(rep.valid, "{:?}", rep.violations);
        assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
    }

    #[test]
    fn duplicate_claim_is_reported() {
        let r = Registry::shipped()
            .with(m("extra", Tier::Logic, &[], &[], &["S9"]))
            .unwrap();
        let rep = r.compose_function_map(&FunctionCatalogue::shipped());
        let v: Vec<_> = rep.of_kind(ViolationKind::DuplicateFunction).collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].subject, "S9");
    }

    #[test]
    fn missing_data_tier_leaves_functions_unmapped() {
        let mut r = Registry::shipped();
        r.remove("МБД");
        let rep = r.compose_function_map(&FunctionCatalogue::shipped());
        let unmapped: BTreeSet<_> = rep
            .of_kind(ViolationKind::UnmappedFunction)
            .map(|v| v.subject.clone())
            .collect();
        let expected: BTreeSet<_> = (25..=31).map(|i| format!("S{i}")).collect();
        assert_eq!(unmapped, expected);
    }
}
