//! Structural facts extracted from Java-like compilation units.
//!
//! A compilation unit (CU) is one source file. Parsing turns its text into a
//! [`CuFacts`] record: package, imports, the classes it declares and their
//! members, plus a line count. Facts can also be loaded from a JSON-lines
//! facts file produced by any external extractor; both routes feed
//! [`resolve_type_references`], which binds every type name to a corpus class
//! or marks it external.

mod facts_file;
mod lexer;
mod loc;
mod parser;
mod resolve;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use facts_file::{load_facts_file, read_facts, write_facts, FormatError};
pub use loc::count_loc;
pub use parser::{parse_compilation_unit, ParseError};
pub use resolve::{
    resolve_type_references, ClassId, ResolvedClass, ResolvedCorpus, ResolvedCu, ResolvedMethod,
    TypeRef,
};

/// Facts for one compilation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuFacts {
    /// Relative file path; the CU identity within one release.
    pub path: String,
    /// Dotted package name, empty for the default package.
    pub package: String,
    /// Imported dotted names in declaration order. Wildcards keep their `.*`.
    pub imports: Vec<String>,
    pub classes: Vec<ClassFacts>,
    /// Lines that are neither blank nor entirely comment.
    pub loc: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Class,
    Interface,
}

/// One declared class or interface.
///
/// Member classes are recorded as their own entries named `Outer.Inner`;
/// anonymous and local classes are folded into the enclosing class. For
/// interfaces, every super-interface is listed in `implements`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFacts {
    pub name: String,
    pub kind: ClassKind,
    #[serde(default)]
    pub extends: Option<String>,
    #[serde(default)]
    pub implements: Vec<String>,
    /// Type names referenced by field declarations, raw types and generic
    /// arguments alike (`List<A>` contributes `List` and `A`).
    #[serde(default)]
    pub field_types: Vec<String>,
    /// Declared field names, used for method cohesion.
    #[serde(default)]
    pub field_names: Vec<String>,
    #[serde(default)]
    pub methods: Vec<MethodFacts>,
    /// Code lines attributed to this class (nested member classes excluded).
    pub loc: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodFacts {
    pub name: String,
    #[serde(default)]
    pub param_types: Vec<String>,
    /// Types named in the signature or body. Using a field does not add the
    /// field's type here.
    #[serde(default)]
    pub referenced_types: BTreeSet<String>,
    /// `(type, method)` call sites on other types.
    #[serde(default)]
    pub external_calls: BTreeSet<(String, String)>,
    /// Fields of the enclosing class this method reads or writes.
    #[serde(default)]
    pub used_fields: BTreeSet<String>,
}

impl CuFacts {
    pub fn class(&self, name: &str) -> Option<&ClassFacts> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Fully qualified name of a class declared in this CU.
    pub fn qualified_name(&self, class: &str) -> String {
        if self.package.is_empty() {
            class.to_string()
        } else {
            format!("{}.{}", self.package, class)
        }
    }
}
