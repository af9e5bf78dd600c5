//! Recursive-descent reader for the supported Java subset.
//!
//! Declarations (package, imports, classes, interfaces, fields, method
//! signatures) are parsed strictly. Method bodies are only scanned: local
//! declarations, `new`, casts and qualified call sites are recognised and
//! everything else is skipped.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::lexer::{tokenize, Tok, Token};
use super::loc::code_lines;
use super::{ClassFacts, ClassKind, CuFacts, MethodFacts};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: u32, column: u32, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

const PRIMITIVES: &[&str] =
    &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null", "var", "yield",
];

fn is_primitive(s: &str) -> bool {
    PRIMITIVES.contains(&s)
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

/// CamelCase segment, as opposed to an ALL_CAPS constant.
fn is_type_like(s: &str) -> bool {
    starts_upper(s) && (s.chars().count() == 1 || s.chars().any(char::is_lowercase))
}

/// A type as written: dotted raw name plus generic arguments.
#[derive(Debug, Clone, PartialEq)]
struct TypeExpr {
    name: String,
    args: Vec<TypeExpr>,
}

impl TypeExpr {
    /// Raw name and all argument names, without primitives and wildcards.
    fn collect_names(&self, type_params: &HashSet<String>, out: &mut Vec<String>) {
        if !self.name.is_empty()
            && self.name != "?"
            && self.name != "var"
            && !is_primitive(&self.name)
            && !type_params.contains(&self.name)
        {
            out.push(self.name.clone());
        }
        for a in &self.args {
            a.collect_names(type_params, out);
        }
    }

    fn names(&self, type_params: &HashSet<String>) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(type_params, &mut out);
        out
    }
}

/// Attempts to read a type starting at `j`. Returns the type and the index
/// just past it, or `None` when the tokens do not form a type.
fn type_at(toks: &[Token], mut j: usize) -> Option<(TypeExpr, usize)> {
    j = skip_annotations(toks, j);
    let first = toks.get(j)?;
    if first.is_punct('?') {
        j += 1;
        if let Some(kw) = toks.get(j).and_then(Token::ident) {
            if kw == "extends" || kw == "super" {
                let (bound, k) = type_at(toks, j + 1)?;
                return Some((TypeExpr { name: "?".into(), args: vec![bound] }, k));
            }
        }
        return Some((TypeExpr { name: "?".into(), args: vec![] }, j));
    }
    let head = first.ident()?;
    if is_keyword(head) && !is_primitive(head) && head != "var" {
        return None;
    }
    let mut name = head.to_string();
    j += 1;
    while toks.get(j).is_some_and(|t| t.is_punct('.'))
        && toks.get(j + 1).and_then(Token::ident).is_some_and(|s| !is_keyword(s))
    {
        name.push('.');
        name.push_str(toks[j + 1].ident().unwrap());
        j += 2;
    }
    let mut args = Vec::new();
    if toks.get(j).is_some_and(|t| t.is_punct('<')) {
        j += 1;
        if toks.get(j).is_some_and(|t| t.is_punct('>')) {
            j += 1;
        } else {
            loop {
                let (arg, k) = type_at(toks, j)?;
                args.push(arg);
                j = k;
                match toks.get(j) {
                    Some(t) if t.is_punct(',') => j += 1,
                    Some(t) if t.is_punct('>') => {
                        j += 1;
                        break;
                    }
                    _ => return None,
                }
            }
        }
        // `Outer<A>.Inner`
        while toks.get(j).is_some_and(|t| t.is_punct('.'))
            && toks.get(j + 1).and_then(Token::ident).is_some_and(|s| !is_keyword(s))
        {
            name.push('.');
            name.push_str(toks[j + 1].ident().unwrap());
            j += 2;
        }
    }
    loop {
        j = skip_annotations(toks, j);
        if toks.get(j).is_some_and(|t| t.is_punct('['))
            && toks.get(j + 1).is_some_and(|t| t.is_punct(']'))
        {
            j += 2;
        } else {
            break;
        }
    }
    Some((TypeExpr { name, args }, j))
}

fn skip_annotations(toks: &[Token], mut j: usize) -> usize {
    while toks.get(j).is_some_and(|t| t.is_punct('@'))
        && toks.get(j + 1).and_then(Token::ident).is_some_and(|s| s != "interface")
    {
        j += 2;
        while toks.get(j).is_some_and(|t| t.is_punct('.')) && toks.get(j + 1).and_then(Token::ident).is_some() {
            j += 2;
        }
        if toks.get(j).is_some_and(|t| t.is_punct('(')) {
            j = match matching(toks, j) {
                Some(close) => close + 1,
                None => return toks.len(),
            };
        }
    }
    j
}

/// Index of the bracket closing the one at `open`.
fn matching(toks: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match toks.get(open)?.tok {
        Tok::Punct('(') => ('(', ')'),
        Tok::Punct('{') => ('{', '}'),
        Tok::Punct('[') => ('[', ']'),
        _ => return None,
    };
    let mut depth = 0usize;
    for (k, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct(o) {
            depth += 1;
        } else if t.is_punct(c) {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

/// Parsed class before flattening; keeps nesting and source span.
#[derive(Debug)]
struct ClassDecl {
    facts: ClassFacts,
    first_line: u32,
    last_line: u32,
    nested: Vec<ClassDecl>,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    eof_line: u32,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + k)
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.line, t.col, msg),
            None => ParseError::new(self.eof_line, 1, msg),
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.is_punct(c) => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error_here(format!("expected '{c}'"))),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().is_some_and(|t| t.is_punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, s: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_ident(s)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.peek().and_then(Token::ident) {
            Some(s) if !is_keyword(s) => {
                self.pos += 1;
                Ok(s.to_string())
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn qualified_name(&mut self) -> Result<String, ParseError> {
        let mut name = self.expect_name()?;
        while self.peek().is_some_and(|t| t.is_punct('.')) {
            if self.peek_at(1).is_some_and(|t| t.is_punct('*')) {
                self.pos += 2;
                name.push_str(".*");
                break;
            }
            self.pos += 1;
            name.push('.');
            name.push_str(&self.expect_name()?);
        }
        Ok(name)
    }

    fn parse_type(&mut self) -> Result<TypeExpr, ParseError> {
        match type_at(self.toks, self.pos) {
            Some((ty, next)) => {
                self.pos = next;
                Ok(ty)
            }
            None => Err(self.error_here("expected type")),
        }
    }

    fn skip_annotations(&mut self) {
        self.pos = skip_annotations(self.toks, self.pos);
    }

    /// Skips annotations and modifiers; errors on unsupported declarations.
    fn skip_modifiers(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_annotations();
            let Some(t) = self.peek() else { return Ok(()) };
            if t.is_punct('@') {
                return Err(self.error_here("unsupported construct: annotation type declaration"));
            }
            match t.ident() {
                Some(s) if MODIFIERS.contains(&s) => self.pos += 1,
                Some("non")
                    if self.peek_at(1).is_some_and(|t| t.is_punct('-'))
                        && self.peek_at(2).is_some_and(|t| t.is_ident("sealed")) =>
                {
                    self.pos += 3
                }
                _ => return Ok(()),
            }
        }
    }

    fn type_params(&mut self) -> Result<Vec<String>, ParseError> {
        let mut names = Vec::new();
        if !self.eat_punct('<') {
            return Ok(names);
        }
        loop {
            self.skip_annotations();
            names.push(self.expect_name()?);
            if self.eat_ident("extends") {
                self.parse_type()?;
                while self.eat_punct('&') {
                    self.parse_type()?;
                }
            }
            if self.eat_punct(',') {
                continue;
            }
            self.expect_punct('>')?;
            return Ok(names);
        }
    }

    fn type_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.parse_type()?.name];
        while self.eat_punct(',') {
            out.push(self.parse_type()?.name);
        }
        Ok(out)
    }

    fn compilation_unit(&mut self) -> Result<(String, Vec<String>, Vec<ClassDecl>), ParseError> {
        let mut package = String::new();
        let start = self.pos;
        self.skip_annotations();
        if self.eat_ident("package") {
            package = self.qualified_name()?;
            self.expect_punct(';')?;
        } else {
            self.pos = start;
        }
        let mut imports = Vec::new();
        while self.eat_ident("import") {
            let is_static = self.eat_ident("static");
            let name = self.qualified_name()?;
            self.expect_punct(';')?;
            // static imports bring in members, not types
            if !is_static {
                imports.push(name);
            }
        }
        let mut classes = Vec::new();
        while self.peek().is_some() {
            if self.eat_punct(';') {
                continue;
            }
            let first_line = self.peek().map(|t| t.line).unwrap_or(self.eof_line);
            self.skip_modifiers()?;
            let kind = self.decl_keyword()?;
            classes.push(self.type_decl(kind, None, 0, first_line)?);
        }
        Ok((package, imports, classes))
    }

    fn decl_keyword(&mut self) -> Result<ClassKind, ParseError> {
        match self.peek().and_then(Token::ident) {
            Some("class") => {
                self.pos += 1;
                Ok(ClassKind::Class)
            }
            Some("interface") => {
                self.pos += 1;
                Ok(ClassKind::Interface)
            }
            Some(kw @ ("enum" | "record")) => {
                Err(self.error_here(format!("unsupported construct: {kw} declaration")))
            }
            _ => Err(self.error_here("expected class or interface declaration")),
        }
    }

    fn type_decl(
        &mut self,
        kind: ClassKind,
        outer: Option<&str>,
        depth: usize,
        first_line: u32,
    ) -> Result<ClassDecl, ParseError> {
        let simple = self.expect_name()?;
        let name = match outer {
            Some(o) => format!("{o}.{simple}"),
            None => simple.clone(),
        };
        let type_params: HashSet<String> = self.type_params()?.into_iter().collect();
        let mut extends = None;
        let mut implements = Vec::new();
        match kind {
            ClassKind::Class => {
                if self.eat_ident("extends") {
                    extends = Some(self.parse_type()?.name);
                }
                if self.eat_ident("implements") {
                    implements = self.type_list()?;
                }
            }
            ClassKind::Interface => {
                if self.eat_ident("extends") {
                    implements = self.type_list()?;
                }
            }
        }
        if self.eat_ident("permits") {
            self.type_list()?;
        }
        self.expect_punct('{')?;
        let mut facts = ClassFacts {
            name,
            kind,
            extends,
            implements,
            field_types: Vec::new(),
            field_names: Vec::new(),
            methods: Vec::new(),
            loc: 0,
        };
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut bodies: Vec<(usize, usize, HashMap<String, String>, HashSet<String>)> = Vec::new();
        let mut nested = Vec::new();

        loop {
            let Some(t) = self.peek() else {
                return Err(self.error_here("unexpected end of input in class body"));
            };
            if t.is_punct('}') {
                self.pos += 1;
                break;
            }
            if self.eat_punct(';') {
                continue;
            }
            let member_line = t.line;
            self.skip_modifiers()?;
            if self.peek().is_some_and(|t| t.is_punct('{')) {
                // initializer block
                let close = matching(self.toks, self.pos)
                    .ok_or_else(|| self.error_here("unbalanced initializer block"))?;
                self.pos = close + 1;
                continue;
            }
            match self.peek().and_then(Token::ident) {
                Some("class" | "interface" | "enum" | "record") => {
                    let kind = self.decl_keyword()?;
                    let inner = self.type_decl(kind, Some(&facts.name), depth + 1, member_line)?;
                    nested.push(inner);
                    continue;
                }
                _ => {}
            }
            let method_tparams: HashSet<String> = self.type_params()?.into_iter().collect();
            let mut all_tparams = type_params.clone();
            all_tparams.extend(method_tparams);

            // constructor: `Name(`
            let is_ctor = self.peek().is_some_and(|t| t.is_ident(&simple))
                && self.peek_at(1).is_some_and(|t| t.is_punct('('));
            let (ret, member_name) = if is_ctor {
                self.pos += 1;
                (None, simple.clone())
            } else {
                let ty = self.parse_type()?;
                (Some(ty), self.expect_name()?)
            };

            if self.peek().is_some_and(|t| t.is_punct('(')) {
                let mut method = MethodFacts {
                    name: member_name,
                    param_types: Vec::new(),
                    referenced_types: BTreeSet::new(),
                    external_calls: BTreeSet::new(),
                    used_fields: BTreeSet::new(),
                };
                if let Some(ret) = &ret {
                    method.referenced_types.extend(ret.names(&all_tparams));
                }
                let params = self.params(&all_tparams, &mut method)?;
                while self.eat_punct('[') {
                    self.expect_punct(']')?;
                }
                if self.eat_ident("throws") {
                    for th in self.type_list()? {
                        if !all_tparams.contains(&th) {
                            method.referenced_types.insert(th);
                        }
                    }
                }
                if self.peek().is_some_and(|t| t.is_punct('{')) {
                    let close = matching(self.toks, self.pos)
                        .ok_or_else(|| self.error_here("unbalanced method body"))?;
                    bodies.push((self.pos + 1, close, params, all_tparams));
                    self.pos = close + 1;
                } else if self.peek().is_some_and(|t| t.is_ident("default")) {
                    return Err(self.error_here("unsupported construct: annotation member default"));
                } else {
                    self.expect_punct(';')?;
                    bodies.push((0, 0, params, all_tparams));
                }
                facts.methods.push(method);
                continue;
            }

            // field declarators
            let Some(ret) = ret else {
                return Err(self.error_here("expected '(' after constructor name"));
            };
            let field_type_names = ret.names(&type_params);
            let mut name = member_name;
            loop {
                while self.eat_punct('[') {
                    self.expect_punct(']')?;
                }
                fields.push((name.clone(), ret.name.clone()));
                facts.field_names.push(name.clone());
                facts.field_types.extend(field_type_names.iter().cloned());
                if self.eat_punct('=') {
                    self.skip_initializer()?;
                }
                if self.eat_punct(',') {
                    name = self.expect_name()?;
                    continue;
                }
                self.expect_punct(';')?;
                break;
            }
        }
        let last_line = self.toks[self.pos - 1].line;

        let field_map: HashMap<String, String> = fields.into_iter().collect();
        let own_names: HashSet<&str> = [simple.as_str(), facts.name.as_str()].into_iter().collect();
        for (method, (start, end, params, tparams)) in facts.methods.iter_mut().zip(bodies) {
            if end > start {
                let scan = BodyScan { toks: &self.toks[start..end], fields: &field_map, tparams: &tparams };
                scan.run(params, method);
            }
            method.external_calls.retain(|(ty, _)| !own_names.contains(ty.as_str()));
            method.referenced_types.retain(|ty| !own_names.contains(ty.as_str()));
        }

        if depth >= 1 {
            // deeper member classes fold into their level-1 ancestor
            for inner in std::mem::take(&mut nested) {
                fold_into(&mut facts, inner);
            }
        }
        Ok(ClassDecl { facts, first_line, last_line, nested })
    }

    fn params(
        &mut self,
        tparams: &HashSet<String>,
        method: &mut MethodFacts,
    ) -> Result<HashMap<String, String>, ParseError> {
        self.expect_punct('(')?;
        let mut locals = HashMap::new();
        if self.eat_punct(')') {
            return Ok(locals);
        }
        loop {
            self.skip_modifiers()?;
            let ty = self.parse_type()?;
            self.eat_varargs();
            // receiver parameter `Foo this`
            let name = if self.eat_ident("this") { "this".to_string() } else { self.expect_name()? };
            while self.eat_punct('[') {
                self.expect_punct(']')?;
            }
            method.param_types.push(ty.name.clone());
            method.referenced_types.extend(ty.names(tparams));
            locals.insert(name, ty.name);
            if self.eat_punct(',') {
                continue;
            }
            self.expect_punct(')')?;
            return Ok(locals);
        }
    }

    fn eat_varargs(&mut self) {
        if self.peek().is_some_and(|t| t.tok == Tok::Op("...")) {
            self.pos += 1;
        }
    }

    /// Skips a field initializer up to the `,` or `;` that ends it.
    fn skip_initializer(&mut self) -> Result<(), ParseError> {
        loop {
            let Some(t) = self.peek() else {
                return Err(self.error_here("unexpected end of input in initializer"));
            };
            match &t.tok {
                Tok::Punct(',' | ';') => return Ok(()),
                Tok::Punct('(' | '{' | '[') => {
                    let close = matching(self.toks, self.pos)
                        .ok_or_else(|| self.error_here("unbalanced brackets in initializer"))?;
                    self.pos = close + 1;
                }
                Tok::Punct(')' | '}' | ']') => {
                    return Err(self.error_here("unbalanced brackets in initializer"));
                }
                Tok::Ident(s) if s == "new" => {
                    self.pos += 1;
                    if type_at(self.toks, self.pos).is_some() {
                        self.parse_type()?;
                    }
                }
                _ => self.pos += 1,
            }
        }
    }
}

fn fold_into(target: &mut ClassFacts, inner: ClassDecl) {
    let ClassDecl { facts, nested, .. } = inner;
    target.field_types.extend(facts.field_types);
    target.field_names.extend(facts.field_names);
    target.methods.extend(facts.methods);
    for n in nested {
        fold_into(target, n);
    }
}

/// Scans one method body for type references, call sites and field use.
struct BodyScan<'a> {
    toks: &'a [Token],
    fields: &'a HashMap<String, String>,
    tparams: &'a HashSet<String>,
}

impl BodyScan<'_> {
    fn run(&self, mut locals: HashMap<String, String>, method: &mut MethodFacts) {
        let toks = self.toks;
        let mut j = 0;
        while j < toks.len() {
            let t = &toks[j];
            let after_dot = j > 0 && toks[j - 1].is_punct('.');
            let Some(word) = t.ident() else {
                // cast: `( Type )` followed by an operand
                if t.is_punct('(') {
                    if let Some((ty, k)) = type_at(toks, j + 1) {
                        let operand = toks.get(k + 1).is_some_and(|n| {
                            matches!(n.tok, Tok::Ident(_) | Tok::Literal) || n.is_punct('(')
                        });
                        if toks.get(k).is_some_and(|c| c.is_punct(')'))
                            && operand
                            && starts_upper(ty.name.rsplit('.').next().unwrap_or(""))
                        {
                            self.add_type(&ty, method);
                            j = k + 1;
                            continue;
                        }
                    }
                }
                j += 1;
                continue;
            };
            if after_dot {
                j += 1;
                continue;
            }
            match word {
                "new" | "instanceof" => {
                    if let Some((ty, k)) = type_at(toks, j + 1) {
                        self.add_type(&ty, method);
                        j = k;
                    } else {
                        j += 1;
                    }
                    continue;
                }
                "catch" => {
                    // `catch (A | B e)`
                    let mut k = j + 2;
                    while let Some((ty, next)) = type_at(toks, k) {
                        self.add_type(&ty, method);
                        k = next;
                        if toks.get(k).is_some_and(|t| t.is_punct('|')) {
                            k += 1;
                        } else {
                            break;
                        }
                    }
                    if let Some(name) = toks.get(k).and_then(Token::ident) {
                        locals.insert(name.to_string(), String::new());
                    }
                    j = k;
                    continue;
                }
                "final" => {
                    j += 1;
                    continue;
                }
                _ => {}
            }

            // local declaration: Type name (= | ; | , | : | ))
            if let Some((ty, k)) = type_at(toks, j) {
                let declares = toks.get(k).and_then(Token::ident).is_some_and(|s| !is_keyword(s))
                    && toks.get(k + 1).is_some_and(|n| {
                        matches!(n.tok, Tok::Punct('=' | ';' | ',' | ':' | ')'))
                    });
                if declares {
                    self.add_type(&ty, method);
                    locals.insert(toks[k].ident().unwrap().to_string(), ty.name.clone());
                    j = k + 1;
                    continue;
                }
            }

            if is_keyword(word) && word != "this" {
                j += 1;
                continue;
            }

            // dotted chain a.b.c
            let mut segs = vec![word];
            let mut k = j + 1;
            while toks.get(k).is_some_and(|t| t.is_punct('.')) {
                match toks.get(k + 1).and_then(Token::ident) {
                    Some(s) => {
                        segs.push(s);
                        k += 2;
                    }
                    None => break,
                }
            }
            let called = toks.get(k).is_some_and(|t| t.is_punct('('));
            self.chain(&segs, called, &locals, method);
            j = k;
        }
    }

    fn chain(
        &self,
        segs: &[&str],
        called: bool,
        locals: &HashMap<String, String>,
        method: &mut MethodFacts,
    ) {
        let head = segs[0];
        let field_type = |name: &str| self.fields.get(name).cloned();
        let call_on = |ty: &str, rest: &[&str], method: &mut MethodFacts| {
            if called && rest.len() == 1 && !ty.is_empty() && ty != "var" && !is_primitive(ty) {
                method.external_calls.insert((ty.to_string(), rest[0].to_string()));
            }
        };

        if head == "this" {
            if let Some(&f) = segs.get(1) {
                if let Some(ty) = field_type(f) {
                    if !(called && segs.len() == 2) {
                        method.used_fields.insert(f.to_string());
                        call_on(&ty, &segs[2..], method);
                    }
                }
            }
            return;
        }
        if let Some(ty) = locals.get(head) {
            call_on(ty, &segs[1..], method);
            return;
        }
        if segs.len() == 1 && called {
            return;
        }
        if let Some(ty) = field_type(head) {
            method.used_fields.insert(head.to_string());
            call_on(&ty, &segs[1..], method);
            return;
        }
        if self.tparams.contains(head) {
            return;
        }
        // qualified or simple type name: up to the first CamelCase segment,
        // then any further CamelCase segments (nested types)
        let Some(first_type) = segs.iter().position(|s| is_type_like(s)) else {
            return;
        };
        if first_type > 0 && segs[..first_type].iter().any(|s| starts_upper(s)) {
            return;
        }
        let mut end = first_type + 1;
        while end < segs.len() && is_type_like(segs[end]) && !(called && end == segs.len() - 1) {
            end += 1;
        }
        let ty = segs[..end].join(".");
        method.referenced_types.insert(ty.clone());
        call_on(&ty, &segs[end..], method);
    }

    fn add_type(&self, ty: &TypeExpr, method: &mut MethodFacts) {
        method.referenced_types.extend(ty.names(self.tparams));
    }
}

/// Parses one compilation unit of the supported Java subset.
pub fn parse_compilation_unit(source_text: &str, path: &str) -> Result<CuFacts, ParseError> {
    let toks = tokenize(source_text)?;
    let lines = code_lines(source_text);
    let mut parser = Parser { toks: &toks, pos: 0, eof_line: lines.len().max(1) as u32 };
    let (package, imports, decls) = parser.compilation_unit()?;
    if decls.is_empty() {
        return Err(ParseError::new(parser.eof_line, 1, "no class or interface declared"));
    }

    // flatten pre-order; spans for line attribution
    let mut flat: Vec<(ClassFacts, u32, u32, usize)> = Vec::new();
    for d in decls {
        let ClassDecl { facts, first_line, last_line, nested } = d;
        flat.push((facts, first_line, last_line, 0));
        for n in nested {
            flat.push((n.facts, n.first_line, n.last_line, 1));
        }
    }
    let mut seen = HashSet::new();
    for (c, first, _, _) in &flat {
        if !seen.insert(c.name.clone()) {
            return Err(ParseError::new(*first, 1, format!("duplicate class {}", c.name)));
        }
    }
    let mut counts = vec![0u32; flat.len()];
    for (idx, _) in lines.iter().enumerate().filter(|(_, &code)| code) {
        let line = idx as u32 + 1;
        let owner = flat
            .iter()
            .enumerate()
            .filter(|(_, (_, a, b, _))| *a <= line && line <= *b)
            .max_by(|(ia, (.., da)), (ib, (.., db))| da.cmp(db).then(ib.cmp(ia)))
            .map(|(i, _)| i);
        if let Some(i) = owner {
            counts[i] += 1;
        }
    }
    let classes = flat
        .into_iter()
        .zip(counts)
        .map(|((mut c, ..), n)| {
            c.loc = n.max(1);
            c
        })
        .collect();

    Ok(CuFacts {
        path: path.to_string(),
        package,
        imports,
        classes,
        loc: lines.iter().filter(|&&c| c).count() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> CuFacts {
        parse_compilation_unit(src, "T.java").unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reads_declarations_and_calls() {
        let cu = parse("class A extends B implements C { D d; void m(){ d.run(); } }");
        assert_eq!(cu.classes.len(), 1);
        let a = &cu.classes[0];
        assert_eq!(a.extends.as_deref(), Some("B"));
        assert_eq!(a.implements, vec!["C"]);
        assert_eq!(a.field_types, vec!["D"]);
        let m = &a.methods[0];
        assert_eq!(m.external_calls, [("D".to_string(), "run".to_string())].into());
        assert_eq!(m.used_fields, set(&["d"]));
        // using a field does not count as a type reference
        assert!(m.referenced_types.is_empty());
    }

    #[test]
    fn two_top_level_classes() {
        let cu = parse("package p;\nclass A {}\nclass B {}\n");
        assert_eq!(cu.classes.len(), 2);
        assert_eq!(cu.package, "p");
    }

    #[test]
    fn generics_contribute_raw_and_argument_types() {
        let cu = parse("import java.util.List;\nclass A { List<Map<K, V>> xs; }");
        assert_eq!(cu.classes[0].field_types, vec!["List", "Map", "K", "V"]);
        assert_eq!(cu.imports, vec!["java.util.List"]);
    }

    #[test]
    fn type_parameters_are_not_references() {
        let cu = parse("class Box<T> { T value; <U> U map(T t, Fn<T, U> f) { return f.apply(t); } }");
        let c = &cu.classes[0];
        assert!(c.field_types.is_empty());
        assert_eq!(c.methods[0].referenced_types, set(&["Fn"]));
        assert_eq!(
            c.methods[0].external_calls,
            [("Fn".to_string(), "apply".to_string())].into()
        );
    }

    #[test]
    fn body_scan_finds_locals_new_casts_and_static_calls() {
        let src = "class A {\n\
            int n;\n\
            void m(Object o) {\n\
                Helper h = new Helper();\n\
                h.go();\n\
                ((Target) o).hit();\n\
                Util.sort(n);\n\
                java.util.Collections.shuffle(null);\n\
                for (Item it : items()) { it.use(); }\n\
                this.n++;\n\
                helper();\n\
            }\n\
        }";
        let m = &parse(src).classes[0].methods[0];
        assert_eq!(
            m.referenced_types,
            set(&["Object", "Helper", "Target", "Util", "java.util.Collections", "Item"])
        );
        let calls: BTreeSet<(String, String)> = [
            ("Helper", "go"),
            ("Util", "sort"),
            ("java.util.Collections", "shuffle"),
            ("Item", "use"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(m.external_calls, calls);
        assert_eq!(m.used_fields, set(&["n"]));
    }

    #[test]
    fn calls_on_own_class_are_not_external() {
        let m = &parse("class A { static void s(){} void m(){ A.s(); } }").classes[0].methods[1];
        assert!(m.external_calls.is_empty());
        assert!(m.referenced_types.is_empty());
    }

    #[test]
    fn unknown_receivers_are_dropped() {
        let m = &parse("class A { void m(){ e.run(); } }").classes[0].methods[0];
        assert!(m.external_calls.is_empty());
    }

    #[test]
    fn anonymous_classes_fold_into_enclosing_method() {
        let src = "class A { void m() { Runnable r = new Runnable() { public void run() { Other.x(); } }; } }";
        let cu = parse(src);
        assert_eq!(cu.classes.len(), 1);
        let m = &cu.classes[0].methods[0];
        assert!(m.referenced_types.contains("Other"));
        assert!(m.external_calls.contains(&("Other".to_string(), "x".to_string())));
    }

    #[test]
    fn member_classes_are_separate_and_deeper_ones_fold() {
        let src = "class A {\n  int a;\n  static class B {\n    void f() {}\n    class C {\n      void g() {}\n    }\n  }\n}\n";
        let cu = parse(src);
        let names: Vec<&str> = cu.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["A", "A.B"]);
        let b = cu.class("A.B").unwrap();
        assert_eq!(b.methods.len(), 2);
        // A owns `class A {`, `int a;`, closing `}`; B owns the remaining six
        assert_eq!(cu.class("A").unwrap().loc, 3);
        assert_eq!(b.loc, 6);
        assert_eq!(cu.loc, 9);
    }

    #[test]
    fn constructors_count_as_methods() {
        let c = &parse("class A { A(B b) { } void m() {} }").classes[0];
        assert_eq!(c.methods.len(), 2);
        assert_eq!(c.methods[0].name, "A");
        assert_eq!(c.methods[0].param_types, vec!["B"]);
    }

    #[test]
    fn interface_super_types_go_to_implements() {
        let c = &parse("interface I extends J, K<L> { int X = 1; void m(); }").classes[0];
        assert_eq!(c.kind, ClassKind::Interface);
        assert_eq!(c.extends, None);
        assert_eq!(c.implements, vec!["J", "K"]);
        assert_eq!(c.methods.len(), 1);
    }

    #[test]
    fn field_initializers_with_generics_and_lambdas() {
        let src = "class A { Map<K, V> m = new HashMap<K, V>(), n = f(a, b); Runnable r = () -> { g(); }; int[] xs = {1, 2}; }";
        let c = &parse(src).classes[0];
        assert_eq!(c.field_names, vec!["m", "n", "r", "xs"]);
    }

    #[test]
    fn annotations_and_modifiers_are_skipped() {
        let src = "@Deprecated public final class A { @Override public synchronized String toString() { return \"\"; } }";
        let c = &parse(src).classes[0];
        assert_eq!(c.methods[0].name, "toString");
        assert_eq!(c.methods[0].referenced_types, set(&["String"]));
    }

    #[test]
    fn static_imports_are_ignored_wildcards_kept() {
        let cu = parse("import static java.lang.Math.max;\nimport p.q.*;\nclass A {}");
        assert_eq!(cu.imports, vec!["p.q.*"]);
    }

    #[test]
    fn enums_are_rejected_with_position() {
        let err = parse_compilation_unit("class A {}\nenum E { X }", "E.java").unwrap_err();
        assert_eq!((err.line, err.column), (2, 1));
        assert!(err.message.contains("enum"));
    }

    #[test]
    fn malformed_class_reports_position() {
        let err = parse_compilation_unit("class A {\n  void m( {\n}", "A.java").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn file_without_classes_is_an_error() {
        assert!(parse_compilation_unit("package p;\n", "p.java").is_err());
    }
}
