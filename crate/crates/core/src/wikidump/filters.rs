//! Predicates applied to raw page XML before parsing and to parsed pages
//! afterwards.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use regex::Regex;
use sxd_xpath::{Context, Factory, Value, XPath};

use crate::chunked_io::RawPageRecord;
use crate::model::Page;

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("invalid regex {expression:?}: {reason}")]
    Regex { expression: String, reason: String },
    #[error("invalid path query {expression:?}: {reason}")]
    PathQuery { expression: String, reason: String },
    #[error("invalid structured query {expression:?}: {reason}")]
    StructQuery { expression: String, reason: String },
    #[error("filter evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreFilterKind {
    /// Regular expression that must match the whole fragment.
    Regex,
    /// XPath 1.0 expression; passes when the selection is non-empty.
    PathQuery,
    /// `for $v in PATH [where COND] return EXPR`; passes when it yields
    /// anything.
    StructQuery,
}

#[derive(Clone)]
enum Compiled {
    Regex(Regex),
    /// Stored as XPath text: compiled expressions are neither `Send` nor
    /// `Sync`, so each thread compiles its own copy on first use.
    XPath(Arc<str>),
}

/// A predicate over the raw page XML.
#[derive(Clone)]
pub struct PreFilter {
    kind: PreFilterKind,
    expression: String,
    compiled: Compiled,
}

impl fmt::Debug for PreFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreFilter")
            .field("kind", &self.kind)
            .field("expression", &self.expression)
            .finish()
    }
}

thread_local! {
    static XPATH_CACHE: RefCell<HashMap<Arc<str>, Rc<XPath>>> = RefCell::new(HashMap::new());
}

fn compile_xpath(expression: &str) -> Result<XPath, String> {
    Factory::new()
        .build(expression)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| "empty expression".to_string())
}

fn cached_xpath(expression: &Arc<str>) -> Result<Rc<XPath>, String> {
    XPATH_CACHE.with(|cache| {
        if let Some(xpath) = cache.borrow().get(expression) {
            return Ok(xpath.clone());
        }
        let xpath = Rc::new(compile_xpath(expression)?);
        cache.borrow_mut().insert(expression.clone(), xpath.clone());
        Ok(xpath)
    })
}

/// Rewrites the supported XQuery subset into an equivalent XPath expression.
///
/// `for $p in /page where $p/ns = 0 return $p/title` becomes
/// `(/page)[ns = 0]/title`.
pub(crate) fn struct_query_to_xpath(query: &str) -> Result<String, String> {
    let re = Regex::new(
        r"(?s)^\s*for\s+\$(\w+)\s+in\s+(.+?)(?:\s+where\s+(.+?))?\s+return\s+(.+?)\s*$",
    )
    .expect("static pattern");
    let caps = re
        .captures(query)
        .ok_or_else(|| "expected `for $v in PATH [where COND] return EXPR`".to_string())?;
    let var = &caps[1];
    let source = caps[2].trim();
    let bind = |expr: &str| -> Result<String, String> {
        let var_re = Regex::new(&format!(r"\${}\b(/)?", regex::escape(var))).expect("escaped");
        let rewritten = var_re.replace_all(expr, |c: &regex::Captures| {
            if c.get(1).is_some() { "./" } else { "." }.to_string()
        });
        if rewritten.contains('$') {
            return Err(format!("unbound variable in {expr:?}"));
        }
        Ok(rewritten.trim().to_string())
    };
    let mut xpath = format!("({source})");
    if let Some(cond) = caps.get(3) {
        xpath.push_str(&format!("[{}]", bind(cond.as_str())?));
    }
    let ret = bind(&caps[4])?;
    if ret != "." {
        let ret = ret.strip_prefix("./").unwrap_or(&ret);
        xpath.push('/');
        xpath.push_str(ret);
    }
    Ok(xpath)
}

impl PreFilter {
    pub fn new(kind: PreFilterKind, expression: impl Into<String>) -> Result<Self, FilterError> {
        let expression = expression.into();
        let compiled = match kind {
            PreFilterKind::Regex => {
                // Whole-input match, as with Java's String.matches.
                let re = Regex::new(&format!("^(?:{expression})$")).map_err(|e| FilterError::Regex {
                    expression: expression.clone(),
                    reason: e.to_string(),
                })?;
                Compiled::Regex(re)
            }
            PreFilterKind::PathQuery => {
                compile_xpath(&expression).map_err(|reason| FilterError::PathQuery {
                    expression: expression.clone(),
                    reason,
                })?;
                Compiled::XPath(expression.as_str().into())
            }
            PreFilterKind::StructQuery => {
                let err = |reason| FilterError::StructQuery {
                    expression: expression.clone(),
                    reason,
                };
                let xpath = struct_query_to_xpath(&expression).map_err(err)?;
                compile_xpath(&xpath).map_err(err)?;
                Compiled::XPath(xpath.into())
            }
        };
        Ok(PreFilter {
            kind,
            expression,
            compiled,
        })
    }

    pub fn regex(expression: &str) -> Result<Self, FilterError> {
        Self::new(PreFilterKind::Regex, expression)
    }

    pub fn path_query(expression: &str) -> Result<Self, FilterError> {
        Self::new(PreFilterKind::PathQuery, expression)
    }

    pub fn struct_query(expression: &str) -> Result<Self, FilterError> {
        Self::new(PreFilterKind::StructQuery, expression)
    }

    /// Keeps only main-namespace pages.
    pub fn main_namespace() -> Self {
        Self::regex("(?is).*<ns>0</ns>.*").expect("static pattern")
    }

    pub fn kind(&self) -> PreFilterKind {
        self.kind
    }

    pub fn expression(&self) -> &str {
        &self.expression
    }

    pub fn evaluate(&self, record: &RawPageRecord) -> Result<bool, FilterError> {
        match &self.compiled {
            Compiled::Regex(re) => Ok(re.is_match(record.xml())),
            Compiled::XPath(expression) => {
                let xpath = cached_xpath(expression).map_err(FilterError::Evaluation)?;
                let package = sxd_document::parser::parse(record.xml())
                    .map_err(|e| FilterError::Evaluation(format!("{e:?}")))?;
                let document = package.as_document();
                let value = xpath
                    .evaluate(&Context::new(), document.root())
                    .map_err(|e| FilterError::Evaluation(e.to_string()))?;
                Ok(match value {
                    Value::Nodeset(nodes) => nodes.size() > 0,
                    Value::Boolean(b) => b,
                    Value::Number(n) => n != 0.0 && !n.is_nan(),
                    Value::String(s) => !s.is_empty(),
                })
            }
        }
    }
}

/// True when every filter accepts the record. Stops at the first rejection.
/// Evaluation errors count as a rejection and are logged.
pub fn apply_prefilters(record: &RawPageRecord, filters: &[PreFilter]) -> bool {
    filters.iter().all(|f| match f.evaluate(record) {
        Ok(pass) => pass,
        Err(e) => {
            log::warn!("{:?} filter {:?} rejected a page: {e}", f.kind, f.expression);
            false
        }
    })
}

type Predicate = dyn Fn(&Page) -> bool + Send + Sync;

/// A predicate over parsed pages.
#[derive(Clone)]
pub struct PostFilter {
    name: String,
    predicate: Arc<Predicate>,
}

impl fmt::Debug for PostFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PostFilter({})", self.name)
    }
}

impl PostFilter {
    pub fn new(name: impl Into<String>, predicate: impl Fn(&Page) -> bool + Send + Sync + 'static) -> Self {
        PostFilter {
            name: name.into(),
            predicate: Arc::new(predicate),
        }
    }

    pub fn namespace(ns: i32) -> Self {
        Self::new(format!("namespace == {ns}"), move |p| p.namespace == ns)
    }

    pub fn min_revisions(n: usize) -> Self {
        Self::new(format!("revisions >= {n}"), move |p| p.revisions.len() >= n)
    }

    pub fn max_revisions(n: usize) -> Self {
        Self::new(format!("revisions <= {n}"), move |p| p.revisions.len() <= n)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn accepts(&self, page: &Page) -> bool {
        (self.predicate)(page)
    }
}

pub fn passes_postfilters(page: &Page, filters: &[PostFilter]) -> bool {
    filters.iter().all(|f| f.accepts(page))
}

pub fn apply_postfilters<'a, I>(pages: I, filters: &'a [PostFilter]) -> impl Iterator<Item = Page> + 'a
where
    I: IntoIterator<Item = Page>,
    I::IntoIter: 'a,
{
    pages.into_iter().filter(move |p| passes_postfilters(p, filters))
}
