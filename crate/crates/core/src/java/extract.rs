use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lexer::{tokenize, Token, TokenKind};
use super::{unit_id, CodeUnit, SourceFile, SplitError, WHOLE_FILE_METHOD};

/// One type declaration on a method's enclosing chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    /// Declaration line, whitespace collapsed, ending in `{`.
    pub declaration: String,
    /// Field declarations (and enum constant lists) in source order.
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TypeKind {
    Class,
    Enum,
}

struct Method {
    chain: Vec<usize>,
    name: String,
    param_types: Vec<String>,
    span: (usize, usize),
}

struct FileParse {
    package: Option<String>,
    imports: Vec<String>,
    classes: Vec<ClassDecl>,
    top_level: Vec<usize>,
    methods: Vec<Method>,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    /// For every brace token, the index of its partner.
    partner: Vec<usize>,
    out: FileParse,
}

const NONE: usize = usize::MAX;

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, SplitError> {
        let toks = tokenize(src)?;
        let mut partner = alloc::vec![NONE; toks.len()];
        let mut stack = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            if t.is_punct('{') {
                stack.push(i);
            } else if t.is_punct('}') {
                let open = stack.pop().ok_or(SplitError::UnbalancedBraces { offset: t.start })?;
                partner[open] = i;
                partner[i] = open;
            }
        }
        if let Some(&open) = stack.last() {
            return Err(SplitError::UnbalancedBraces { offset: toks[open].start });
        }
        Ok(Parser {
            src,
            toks,
            partner,
            out: FileParse {
                package: None,
                imports: Vec::new(),
                classes: Vec::new(),
                top_level: Vec::new(),
                methods: Vec::new(),
            },
        })
    }

    fn text(&self, from: usize, to_inclusive: usize) -> &'a str {
        &self.src[self.toks[from].start..self.toks[to_inclusive].end]
    }

    fn word(&self, i: usize) -> Option<&'a str> {
        self.toks.get(i).filter(|t| t.is_ident()).map(|t| t.text(self.src))
    }

    fn is_punct(&self, i: usize, c: char) -> bool {
        self.toks.get(i).is_some_and(|t| t.is_punct(c))
    }

    /// Scans a member header starting at `pos` up to the first `;`, `{` or `}`
    /// outside parentheses. Braces that belong to an initializer expression are
    /// skipped. Returns (terminator index, saw an `=`).
    fn scan_member(&self, mut pos: usize) -> (usize, bool) {
        let mut parens = 0usize;
        let mut assign = false;
        let mut after_params = false;
        while pos < self.toks.len() {
            let t = self.toks[pos];
            match t.kind {
                TokenKind::Punct('(') => parens += 1,
                TokenKind::Punct(')') => {
                    parens = parens.saturating_sub(1);
                    after_params |= parens == 0;
                }
                TokenKind::Punct('=') if parens == 0 => assign = true,
                // Annotation element default: `int[] codes() default {1, 2};`
                TokenKind::Ident if parens == 0 && after_params && self.word(pos) == Some("default") => {
                    assign = true
                }
                TokenKind::Punct('{') if assign || parens > 0 => {
                    pos = self.partner[pos];
                }
                TokenKind::Punct(';') | TokenKind::Punct('{') | TokenKind::Punct('}')
                    if parens == 0 =>
                {
                    return (pos, assign);
                }
                TokenKind::Punct('}') => {}
                _ => {}
            }
            pos += 1;
        }
        (pos, assign)
    }

    fn parse_file(&mut self) {
        let mut pos = 0;
        while pos < self.toks.len() {
            let (end, _) = self.scan_member(pos);
            if end >= self.toks.len() {
                break;
            }
            let term = self.toks[end];
            if term.is_punct(';') {
                if end > pos {
                    match self.word(pos) {
                        Some("package") => self.out.package = Some(collapse_ws(self.text(pos, end))),
                        Some("import") => self.out.imports.push(self.text(pos, end).trim().to_string()),
                        _ => {}
                    }
                }
                pos = end + 1;
            } else if term.is_punct('{') {
                let close = self.partner[end];
                if let Some((name, kind)) = self.type_declaration(pos, end) {
                    let idx = self.push_class(name, pos, end);
                    self.out.top_level.push(idx);
                    self.parse_body(end, kind, &[idx]);
                }
                pos = close + 1;
            } else {
                pos = end + 1;
            }
        }
    }

    fn push_class(&mut self, name: String, header_start: usize, open: usize) -> usize {
        let declaration = if header_start < open {
            format!("{} {{", collapse_ws(self.text(header_start, open - 1)))
        } else {
            "{".to_string()
        };
        self.out.classes.push(ClassDecl { name, declaration, fields: Vec::new() });
        self.out.classes.len() - 1
    }

    /// Recognizes `class X`, `interface X`, `enum X`, `record X(`, `@interface X`.
    fn type_declaration(&self, start: usize, end: usize) -> Option<(String, TypeKind)> {
        for k in start..end {
            let Some(w) = self.word(k) else { continue };
            if k > start && self.is_punct(k - 1, '.') {
                continue;
            }
            let Some(name) = self.word(k + 1).filter(|_| k + 1 < end) else { continue };
            let kind = match w {
                "class" => TypeKind::Class,
                "interface" => TypeKind::Class,
                "enum" => TypeKind::Enum,
                "record" if self.is_punct(k + 2, '(') || self.is_punct(k + 2, '<') => TypeKind::Class,
                _ => continue,
            };
            return Some((name.to_string(), kind));
        }
        None
    }

    /// Skips annotations, returning the indices of the remaining tokens.
    fn without_annotations(&self, start: usize, end: usize) -> Vec<usize> {
        let mut kept = Vec::new();
        let mut i = start;
        while i < end {
            if self.is_punct(i, '@') && self.word(i + 1).is_some_and(|w| w != "interface") {
                i += 2;
                while self.is_punct(i, '.') && self.word(i + 1).is_some() {
                    i += 2;
                }
                if self.is_punct(i, '(') {
                    i = self.matching_paren(i, end) + 1;
                }
                continue;
            }
            kept.push(i);
            i += 1;
        }
        kept
    }

    fn matching_paren(&self, open: usize, limit: usize) -> usize {
        let mut depth = 0usize;
        let mut i = open;
        while i < limit {
            if self.is_punct(i, '(') {
                depth += 1;
            } else if self.is_punct(i, ')') {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            i += 1;
        }
        limit.saturating_sub(1)
    }

    /// Recognizes `[modifiers] [<T>] [Type] name(params) [throws ...]` in the
    /// header `start..end`. Returns the name and the parameter token range.
    fn method_header(&self, start: usize, end: usize) -> Option<(String, usize, usize)> {
        let kept = self.without_annotations(start, end);
        let open_pos = kept.iter().position(|&i| self.is_punct(i, '('))?;
        if open_pos == 0 {
            return None;
        }
        let name = self.word(kept[open_pos - 1])?;
        if matches!(name, "new" | "if" | "for" | "while" | "switch" | "catch" | "synchronized") {
            return None;
        }
        let open = kept[open_pos];
        let close = self.matching_paren(open, end);
        if !self.is_punct(close, ')') {
            return None;
        }
        if close + 1 < end && !(self.word(close + 1) == Some("throws") || self.is_punct(close + 1, '[')) {
            return None;
        }
        for i in close + 1..end {
            let ok = match self.toks[i].kind {
                TokenKind::Ident => true,
                TokenKind::Punct(c) => matches!(c, '.' | ',' | '<' | '>' | '[' | ']' | '?' | '&'),
                TokenKind::Literal => false,
            };
            if !ok {
                return None;
            }
        }
        Some((name.to_string(), open, close))
    }

    fn param_types(&self, open: usize, close: usize) -> Vec<String> {
        let mut params = Vec::new();
        let mut current = Vec::new();
        let mut depth = 0i32;
        for i in open + 1..close {
            let t = self.toks[i];
            match t.kind {
                TokenKind::Punct('<') | TokenKind::Punct('(') => depth += 1,
                TokenKind::Punct('>') | TokenKind::Punct(')') => depth -= 1,
                TokenKind::Punct(',') if depth == 0 => {
                    params.push(core::mem::take(&mut current));
                    continue;
                }
                _ => {}
            }
            current.push(i);
        }
        if !current.is_empty() {
            params.push(current);
        }
        params.iter().filter_map(|p| self.param_type(p)).collect()
    }

    fn param_type(&self, tokens: &[usize]) -> Option<String> {
        let (&first, &last) = (tokens.first()?, tokens.last()?);
        let kept: Vec<usize> = self
            .without_annotations(first, last + 1)
            .into_iter()
            .filter(|&i| !self.toks[i].is_word(self.src, "final"))
            .collect();
        // Trailing `[]` pairs after the name belong to the type: `String args[]`.
        let mut end = kept.len();
        let mut dims = 0;
        while end >= 2 && self.is_punct(kept[end - 1], ']') && self.is_punct(kept[end - 2], '[') {
            end -= 2;
            dims += 1;
        }
        if end < 2 {
            // A lone token: decompilers sometimes drop parameter names.
            return kept.first().map(|&i| self.toks[i].text(self.src).to_string());
        }
        let mut ty = String::new();
        let mut prev_wordish = false;
        for &i in &kept[..end - 1] {
            let t = self.toks[i];
            let wordish = !matches!(t.kind, TokenKind::Punct(_));
            if wordish && prev_wordish {
                ty.push(' ');
            }
            ty.push_str(t.text(self.src));
            prev_wordish = wordish;
        }
        for _ in 0..dims {
            ty.push_str("[]");
        }
        Some(ty)
    }

    fn parse_body(&mut self, open: usize, kind: TypeKind, chain: &[usize]) {
        let close = self.partner[open];
        let current = *chain.last().expect("chain is never empty");
        let mut pos = open + 1;
        if kind == TypeKind::Enum {
            pos = self.enum_constants(pos, close, current);
        }
        while pos < close {
            if self.is_punct(pos, ';') {
                pos += 1;
                continue;
            }
            let (end, assign) = self.scan_member(pos);
            if end >= close {
                break;
            }
            let term = self.toks[end];
            if term.is_punct(';') {
                if assign || self.method_header(pos, end).is_none() {
                    let field = self.text(pos, end).trim().to_string();
                    self.out.classes[current].fields.push(field);
                }
                pos = end + 1;
            } else if term.is_punct('{') {
                let body_close = self.partner[end];
                if let Some((name, nested_kind)) = self.type_declaration(pos, end) {
                    let idx = self.push_class(name, pos, end);
                    let mut nested = chain.to_vec();
                    nested.push(idx);
                    self.parse_body(end, nested_kind, &nested);
                } else if let Some((name, p_open, p_close)) = self.method_header(pos, end) {
                    let param_types = self.param_types(p_open, p_close);
                    self.out.methods.push(Method {
                        chain: chain.to_vec(),
                        name,
                        param_types,
                        span: (self.toks[pos].start, self.toks[body_close].end),
                    });
                }
                pos = body_close + 1;
            } else {
                // Stray `}` cannot happen inside a matched body.
                pos = end + 1;
            }
        }
    }

    /// Consumes the enum constant list, recording it as a class-level line.
    fn enum_constants(&mut self, start: usize, close: usize, class: usize) -> usize {
        let mut i = start;
        while i < close {
            if self.is_punct(i, '{') {
                i = self.partner[i] + 1;
                continue;
            }
            if self.is_punct(i, ';') {
                break;
            }
            i += 1;
        }
        if i > start {
            let last = if i < close { i } else { i - 1 };
            let text = collapse_ws(self.text(start, last));
            if !text.is_empty() && text != ";" {
                self.out.classes[class].fields.push(text);
            }
        }
        if i < close {
            i + 1
        } else {
            close
        }
    }
}

fn qualified_name(package: Option<&str>, classes: &[ClassDecl], chain: &[usize]) -> String {
    let nested = chain.iter().map(|&i| classes[i].name.as_str()).collect::<Vec<_>>().join("$");
    match package {
        Some(p) if !p.is_empty() => format!("{p}.{nested}"),
        _ => nested,
    }
}

fn package_name(package_line: Option<&str>) -> Option<String> {
    let line = package_line?;
    let rest = line.strip_prefix("package")?.trim().trim_end_matches(';').trim();
    Some(rest.split_whitespace().collect())
}

/// Header text for a method: package line, every import, then each enclosing
/// class declaration followed by that class's fields, outermost first.
pub fn build_context_header(file: &SourceFile, class_chain: &[ClassDecl]) -> String {
    match Parser::new(&file.text) {
        Ok(mut p) => {
            p.parse_file();
            header_from_parts(p.out.package.as_deref(), &p.out.imports, class_chain)
        }
        Err(_) => header_from_parts(None, &[], class_chain),
    }
}

fn header_from_parts(package: Option<&str>, imports: &[String], chain: &[ClassDecl]) -> String {
    let mut lines: Vec<&str> = Vec::new();
    if let Some(p) = package {
        lines.push(p);
    }
    lines.extend(imports.iter().map(String::as_str));
    for class in chain {
        lines.push(&class.declaration);
        lines.extend(class.fields.iter().map(String::as_str));
    }
    lines.join("\n")
}

/// Splits one file into method-level units, in source order.
pub fn extract_methods(file: &SourceFile) -> Result<Vec<CodeUnit>, SplitError> {
    let mut parser = Parser::new(&file.text)?;
    parser.parse_file();
    let parse = parser.out;
    let package = package_name(parse.package.as_deref());

    let mut units = Vec::with_capacity(parse.methods.len());
    for m in &parse.methods {
        let chain: Vec<ClassDecl> = m.chain.iter().map(|&i| parse.classes[i].clone()).collect();
        let class_name = qualified_name(package.as_deref(), &parse.classes, &m.chain);
        let context_header = header_from_parts(parse.package.as_deref(), &parse.imports, &chain);
        let body_text = file.text[m.span.0..m.span.1].to_string();
        units.push(CodeUnit {
            unit_id: unit_id(&file.path, &class_name, &m.name, &m.param_types, m.span),
            class_name,
            method_name: m.name.clone(),
            param_count: m.param_types.len(),
            param_types: m.param_types.clone(),
            context_header,
            body_text,
            source_path: file.path.clone(),
            byte_span: m.span,
        });
    }
    units.sort_by_key(|u| u.byte_span.0);
    Ok(units)
}

/// The whole file as a single unit, for runs with splitting disabled.
pub fn whole_file_unit(file: &SourceFile) -> CodeUnit {
    let class_name = match Parser::new(&file.text) {
        Ok(mut p) => {
            p.parse_file();
            let package = package_name(p.out.package.as_deref());
            p.out
                .top_level
                .first()
                .map(|&i| qualified_name(package.as_deref(), &p.out.classes, &[i]))
        }
        Err(_) => None,
    }
    .unwrap_or_else(|| {
        let stem = file.path.rsplit('/').next().unwrap_or(&file.path);
        stem.trim_end_matches(".java").to_string()
    });
    let span = (0, file.text.len());
    CodeUnit {
        unit_id: unit_id(&file.path, &class_name, WHOLE_FILE_METHOD, &[], span),
        class_name,
        method_name: WHOLE_FILE_METHOD.to_string(),
        param_count: 0,
        param_types: Vec::new(),
        context_header: String::new(),
        body_text: file.text.clone(),
        source_path: file.path.clone(),
        byte_span: span,
    }
}
