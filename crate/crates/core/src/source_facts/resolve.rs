//! Name resolution: binds type names to corpus classes.
//!
//! Lookup order for a simple name: same CU, same package, explicit
//! single-type imports (first match in declaration order), wildcard imports
//! (only when exactly one corpus package supplies the name). Anything else is
//! external. Dotted names are tried as fully qualified first, then as
//! `Outer.Inner` relative to a resolvable head.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ClassKind, CuFacts};

/// A corpus class: CU path plus (possibly dotted) class name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId {
    pub cu: String,
    pub class: String,
}

impl ClassId {
    pub fn new(cu: impl Into<String>, class: impl Into<String>) -> Self {
        Self { cu: cu.into(), class: class.into() }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.cu, self.class)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeRef {
    Internal(ClassId),
    External(String),
}

impl TypeRef {
    pub fn internal(&self) -> Option<&ClassId> {
        match self {
            TypeRef::Internal(id) => Some(id),
            TypeRef::External(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedMethod {
    pub name: String,
    pub referenced_types: BTreeSet<TypeRef>,
    pub external_calls: BTreeSet<(TypeRef, String)>,
    pub used_fields: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedClass {
    pub id: ClassId,
    pub kind: ClassKind,
    pub extends: Option<TypeRef>,
    pub implements: Vec<TypeRef>,
    pub field_types: Vec<TypeRef>,
    pub field_names: Vec<String>,
    pub methods: Vec<ResolvedMethod>,
    pub loc: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedCu {
    pub path: String,
    pub package: String,
    pub classes: Vec<ResolvedClass>,
    pub loc: u32,
}

/// Corpus with every type name bound; CUs sorted by path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedCorpus {
    pub cus: Vec<ResolvedCu>,
}

impl ResolvedCorpus {
    pub fn classes(&self) -> impl Iterator<Item = &ResolvedClass> {
        self.cus.iter().flat_map(|cu| cu.classes.iter())
    }

    pub fn cu(&self, path: &str) -> Option<&ResolvedCu> {
        self.cus.iter().find(|cu| cu.path == path)
    }
}

struct Index<'a> {
    /// Fully qualified name to class; first CU in path order wins.
    by_fqn: BTreeMap<String, ClassId>,
    cus: BTreeMap<&'a str, &'a CuFacts>,
}

impl<'a> Index<'a> {
    fn build(corpus: &'a [CuFacts]) -> Self {
        let cus: BTreeMap<&str, &CuFacts> = corpus.iter().map(|cu| (cu.path.as_str(), cu)).collect();
        let mut by_fqn = BTreeMap::new();
        for cu in cus.values() {
            for c in &cu.classes {
                let fqn = cu.qualified_name(&c.name);
                if let Some(prev) = by_fqn.get(&fqn) {
                    log::warn!("{fqn} declared in both {prev} and {}; keeping the first", cu.path);
                    continue;
                }
                by_fqn.insert(fqn, ClassId::new(&cu.path, &c.name));
            }
        }
        Index { by_fqn, cus }
    }

    fn resolve(&self, cu: &CuFacts, name: &str) -> TypeRef {
        if let Some(id) = self.by_fqn.get(name) {
            return TypeRef::Internal(id.clone());
        }
        if let Some((head, rest)) = name.split_once('.') {
            if let TypeRef::Internal(outer) = self.resolve_simple(cu, head) {
                let nested = format!("{}.{}", outer.class, rest);
                if self.cus[outer.cu.as_str()].class(&nested).is_some() {
                    return TypeRef::Internal(ClassId::new(outer.cu, nested));
                }
            }
            return TypeRef::External(name.to_string());
        }
        self.resolve_simple(cu, name)
    }

    fn resolve_simple(&self, cu: &CuFacts, name: &str) -> TypeRef {
        // same CU: exact, then member class by last segment
        if let Some(c) = cu.class(name).or_else(|| {
            cu.classes.iter().find(|c| c.name.rsplit('.').next() == Some(name))
        }) {
            return TypeRef::Internal(ClassId::new(&cu.path, &c.name));
        }
        if let Some(id) = self.by_fqn.get(&qualify(&cu.package, name)) {
            return TypeRef::Internal(id.clone());
        }
        let mut explicit = cu
            .imports
            .iter()
            .filter(|imp| !imp.ends_with(".*") && imp.rsplit('.').next() == Some(name));
        if let Some(first) = explicit.next() {
            if explicit.next().is_some() {
                log::info!("{}: several imports match {name}; using {first}", cu.path);
            }
            return match self.by_fqn.get(first) {
                Some(id) => TypeRef::Internal(id.clone()),
                None => TypeRef::External(first.clone()),
            };
        }
        let wildcard: BTreeSet<&ClassId> = cu
            .imports
            .iter()
            .filter_map(|imp| imp.strip_suffix(".*"))
            .filter_map(|pkg| self.by_fqn.get(&qualify(pkg, name)))
            .collect();
        match wildcard.len() {
            1 => TypeRef::Internal((*wildcard.first().unwrap()).clone()),
            0 => TypeRef::External(name.to_string()),
            _ => {
                log::info!("{}: {name} matches several wildcard imports; left external", cu.path);
                TypeRef::External(name.to_string())
            }
        }
    }
}

fn qualify(package: &str, name: &str) -> String {
    if package.is_empty() {
        name.to_string()
    } else {
        format!("{package}.{name}")
    }
}

/// Binds every type name in the corpus. Paths are assumed unique.
pub fn resolve_type_references(corpus: &[CuFacts]) -> ResolvedCorpus {
    let index = Index::build(corpus);
    let mut cus = Vec::with_capacity(corpus.len());
    for cu in index.cus.values() {
        let mut classes = Vec::with_capacity(cu.classes.len());
        for c in &cu.classes {
            let id = ClassId::new(&cu.path, &c.name);
            let own = TypeRef::Internal(id.clone());
            let r = |n: &str| index.resolve(cu, n);
            let methods = c
                .methods
                .iter()
                .map(|m| ResolvedMethod {
                    name: m.name.clone(),
                    referenced_types: m
                        .referenced_types
                        .iter()
                        .map(|n| r(n))
                        .filter(|t| *t != own)
                        .collect(),
                    external_calls: m
                        .external_calls
                        .iter()
                        .map(|(ty, name)| (r(ty), name.clone()))
                        .filter(|(t, _)| *t != own)
                        .collect(),
                    used_fields: m.used_fields.clone(),
                })
                .collect();
            classes.push(ResolvedClass {
                id,
                kind: c.kind,
                extends: c.extends.as_deref().map(r),
                implements: c.implements.iter().map(|n| r(n)).collect(),
                field_types: c.field_types.iter().map(|n| r(n)).collect(),
                field_names: c.field_names.clone(),
                methods,
                loc: c.loc,
            });
        }
        cus.push(ResolvedCu {
            path: cu.path.clone(),
            package: cu.package.clone(),
            classes,
            loc: cu.loc,
        });
    }
    ResolvedCorpus { cus }
}
