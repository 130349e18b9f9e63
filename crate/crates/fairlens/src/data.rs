//! Categorical tabular data: schemas, datasets, exact counting.
//!
//! Everything downstream (graphs, networks, audits, repairs) consumes the
//! types in this module. Two conventions matter throughout:
//!
//! * Values are stored as category indices into closed domains; unseen
//!   categories at query time are errors, never zero-count cells.
//! * All probabilities derived from data are ratios of 64-bit counts, so the
//!   toy-table goldens hold exactly.
//!
//! The protected attribute is written `C` with protected value `c-` and
//! non-protected value `c+`; the binary decision attribute is `E` with
//! positive outcome `e+`. Those roles live on the [`Schema`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One named attribute with its ordered, closed domain of category labels.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Attribute {
    pub name: String,
    pub domain: Vec<String>,
}

/// The audit roles: which attribute is protected (C), which is the decision
/// (E), and which categories are the protected value c- and the positive
/// outcome e+.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub protected: String,
    pub decision: String,
    pub positive_label: String,
    pub protected_label: String,
}

/// Attribute layout of a dataset, plus (optionally) the audit roles.
///
/// Roles are optional so that structure learning can run on data without a
/// designated decision; every audit/repair operation requires them and says
/// so through [`Schema::roles`].
#[derive(Debug, Clone)]
pub struct Schema {
    attributes: Vec<Attribute>,
    index: HashMap<String, usize>,
    roles: Option<Roles>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes && self.roles == other.roles
    }
}
impl Eq for Schema {}

impl Schema {
    /// Role-less schema (sufficient for loading and structure learning).
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        Self::build(attributes, None)
    }

    /// Schema with audit roles; validates every role invariant eagerly.
    pub fn with_roles(attributes: Vec<Attribute>, roles: Roles) -> Result<Self> {
        Self::build(attributes, Some(roles))
    }

    fn build(attributes: Vec<Attribute>, roles: Option<Roles>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if attr.name.is_empty() {
                return Err(Error::Schema("empty attribute name".into()));
            }
            if index.insert(attr.name.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            if attr.domain.is_empty() {
                return Err(Error::Schema(format!("attribute `{}` has an empty domain", attr.name)));
            }
            if attr.domain.len() > usize::from(u16::MAX) {
                return Err(Error::Schema(format!(
                    "attribute `{}` has {} categories; at most {} supported",
                    attr.name,
                    attr.domain.len(),
                    u16::MAX
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for c in &attr.domain {
                if !seen.insert(c) {
                    return Err(Error::Schema(format!(
                        "duplicate category `{c}` in attribute `{}`",
                        attr.name
                    )));
                }
            }
        }
        let schema = Schema { attributes, index, roles: None };
        match roles {
            None => Ok(schema),
            Some(r) => schema.into_with_roles(r),
        }
    }

    fn into_with_roles(mut self, roles: Roles) -> Result<Self> {
        if roles.protected == roles.decision {
            return Err(Error::Schema("protected and decision attributes must differ".into()));
        }
        for (role, attr, label) in [
            ("protected", &roles.protected, &roles.protected_label),
            ("decision", &roles.decision, &roles.positive_label),
        ] {
            let a = self
                .attribute(attr)
                .map_err(|_| Error::Schema(format!("{role} attribute `{attr}` not in schema")))?;
            if a.domain.len() != 2 {
                return Err(Error::Schema(format!(
                    "{role} attribute `{attr}` must be binary, has {} categories",
                    a.domain.len()
                )));
            }
            if !a.domain.iter().any(|c| c == label) {
                return Err(Error::Schema(format!(
                    "label `{label}` not in the domain of {role} attribute `{attr}`"
                )));
            }
        }
        self.roles = Some(roles);
        Ok(self)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn attr_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attribute(&self, name: &str) -> Result<&Attribute> {
        Ok(&self.attributes[self.attr_index(name)?])
    }

    /// Audit roles, or an error explaining they are required.
    pub fn roles(&self) -> Result<&Roles> {
        self.roles.as_ref().ok_or_else(|| {
            Error::Schema("schema has no audit roles (protected/decision); supply a schema file".into())
        })
    }

    pub fn roles_opt(&self) -> Option<&Roles> {
        self.roles.as_ref()
    }

    pub fn category_index(&self, attribute: &str, label: &str) -> Result<u16> {
        let attr = self.attribute(attribute)?;
        attr.domain
            .iter()
            .position(|c| c == label)
            .map(|i| i as u16)
            .ok_or_else(|| Error::UnknownCategory {
                attribute: attribute.to_string(),
                value: label.to_string(),
            })
    }

    /// (attribute index, protected-value index, non-protected-value index)
    /// for C, i.e. (C, c-, c+).
    pub fn protected_coords(&self) -> Result<(usize, u16, u16)> {
        let roles = self.roles()?;
        let ai = self.attr_index(&roles.protected)?;
        let neg = self.category_index(&roles.protected, &roles.protected_label)?;
        Ok((ai, neg, 1 - neg))
    }

    /// (attribute index, positive-value index, negative-value index) for E,
    /// i.e. (E, e+, e-).
    pub fn decision_coords(&self) -> Result<(usize, u16, u16)> {
        let roles = self.roles()?;
        let ai = self.attr_index(&roles.decision)?;
        let pos = self.category_index(&roles.decision, &roles.positive_label)?;
        Ok((ai, pos, 1 - pos))
    }

    /// Resolve an assignment's bindings to (attribute index, value index)
    /// pairs sorted by attribute index.
    pub fn resolve(&self, a: &Assignment) -> Result<Vec<(usize, u16)>> {
        let mut out = Vec::with_capacity(a.len());
        for (name, label) in a.iter() {
            out.push((self.attr_index(name)?, self.category_index(name, label)?));
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Sidecar JSON representation, per the documented file format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SchemaFile::from(self)).expect("schema serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SchemaFile = serde_json::from_str(text)?;
        file.into_schema()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

/// On-disk schema sidecar:
/// `{"attributes":[{"name":..,"domain":[..]}],"protected":..,"decision":..,
///   "positive_label":..,"protected_label":..}`.
/// The four role fields are all present or all absent.
#[derive(serde::Serialize, serde::Deserialize)]
struct SchemaFile {
    attributes: Vec<Attribute>,
    #[serde(skip_serializing_if = "Option::is_none")]
    protected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decision: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    positive_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    protected_label: Option<String>,
}

impl From<&Schema> for SchemaFile {
    fn from(s: &Schema) -> Self {
        SchemaFile {
            attributes: s.attributes.clone(),
            protected: s.roles.as_ref().map(|r| r.protected.clone()),
            decision: s.roles.as_ref().map(|r| r.decision.clone()),
            positive_label: s.roles.as_ref().map(|r| r.positive_label.clone()),
            protected_label: s.roles.as_ref().map(|r| r.protected_label.clone()),
        }
    }
}

impl SchemaFile {
    fn into_schema(self) -> Result<Schema> {
        let roles = match (self.protected, self.decision, self.positive_label, self.protected_label) {
            (Some(protected), Some(decision), Some(positive_label), Some(protected_label)) => {
                Some(Roles { protected, decision, positive_label, protected_label })
            }
            (None, None, None, None) => None,
            _ => {
                return Err(Error::Schema(
                    "schema file must provide all of protected/decision/positive_label/protected_label or none".into(),
                ))
            }
        };
        Schema::build(self.attributes, roles)
    }
}

/// A partial value assignment: attribute name -> category label.
///
/// Stored name-sorted, so equality, ordering, hashing, and JSON output are
/// all canonical. `q`, `b`, and `s` subpopulation selectors are Assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct Assignment {
    bindings: BTreeMap<String, String>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut a = Assignment::new();
        for (k, v) in pairs {
            a.set(k, v);
        }
        a
    }

    /// Builder-style binding.
    pub fn bind(mut self, attribute: &str, label: &str) -> Self {
        self.set(attribute, label);
        self
    }

    pub fn set(&mut self, attribute: &str, label: &str) {
        self.bindings.insert(attribute.to_string(), label.to_string());
    }

    pub fn get(&self, attribute: &str) -> Option<&str> {
        self.bindings.get(attribute).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn contains(&self, attribute: &str) -> bool {
        self.bindings.contains_key(attribute)
    }

    /// Union of two assignments; a conflicting binding is an error.
    pub fn merged(&self, other: &Assignment) -> Result<Assignment> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            match out.get(k) {
                Some(existing) if existing != v => {
                    return Err(Error::Schema(format!(
                        "conflicting bindings for `{k}`: `{existing}` vs `{v}`"
                    )))
                }
                _ => out.set(k, v),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}}")
    }
}

/// Per-subpopulation 2x2 counts over (C, E): the audit's raw material.
///
/// `cn`/`cp` are the protected (c-) and non-protected (c+) groups; `ep`/`en`
/// the positive and negative decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub conditioning: Assignment,
    pub n_cn_ep: u64,
    pub n_cn_en: u64,
    pub n_cp_ep: u64,
    pub n_cp_en: u64,
}

impl ContingencyTable {
    pub fn n_cn(&self) -> u64 {
        self.n_cn_ep + self.n_cn_en
    }
    pub fn n_cp(&self) -> u64 {
        self.n_cp_ep + self.n_cp_en
    }
    pub fn n_ep(&self) -> u64 {
        self.n_cn_ep + self.n_cp_ep
    }
    pub fn n_en(&self) -> u64 {
        self.n_cn_en + self.n_cp_en
    }
    pub fn n(&self) -> u64 {
        self.n_cn() + self.n_cp()
    }
}

/// Immutable categorical dataset: a schema plus rows of category indices.
///
/// Rows may carry positive integer weights (a compact encoding of repeated
/// tuples); the default weight is 1. All counting operations are
/// weight-aware. Operations never mutate; they build new datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<u16>>,
    weights: Option<Vec<u64>>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<u16>>) -> Result<Self> {
        Self::with_weights(schema, rows, None)
    }

    pub fn with_weights(schema: Schema, rows: Vec<Vec<u16>>, weights: Option<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Schema("dataset must contain at least one row".into()));
        }
        for row in &rows {
            if row.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row has {} values, schema has {} attributes",
                    row.len(),
                    schema.len()
                )));
            }
            for (ai, &v) in row.iter().enumerate() {
                if usize::from(v) >= schema.attributes[ai].domain.len() {
                    return Err(Error::Schema(format!(
                        "value index {v} out of domain for attribute `{}`",
                        schema.attributes[ai].name
                    )));
                }
            }
        }
        if let Some(w) = &weights {
            if w.len() != rows.len() {
                return Err(Error::Schema("weights length differs from row count".into()));
            }
            if w.contains(&0) {
                return Err(Error::Schema("row weights must be positive".into()));
            }
        }
        Ok(Dataset { schema, rows, weights })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<u16>] {
        &self.rows
    }

    /// Physical (stored) row count.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn weight(&self, row: usize) -> u64 {
        self.weights.as_ref().map_or(1, |w| w[row])
    }

    /// Logical row count: sum of weights.
    pub fn total_weight(&self) -> u64 {
        match &self.weights {
            Some(w) => w.iter().sum(),
            None => self.rows.len() as u64,
        }
    }

    /// Category label of a stored value.
    pub fn label(&self, attr_index: usize, value: u16) -> &str {
        &self.schema.attributes[attr_index].domain[usize::from(value)]
    }

    /// Expand weighted rows into unit-weight rows (used by the per-tuple
    /// repair strategies). A no-op for already-unweighted data.
    pub fn expand_weights(&self) -> Dataset {
        match &self.weights {
            None => self.clone(),
            Some(w) => {
                let mut rows = Vec::with_capacity(self.total_weight() as usize);
                for (row, &k) in self.rows.iter().zip(w) {
                    for _ in 0..k {
                        rows.push(row.clone());
                    }
                }
                Dataset { schema: self.schema.clone(), rows, weights: None }
            }
        }
    }

    // ---- CSV ----

    /// Load a CSV file: UTF-8, comma-separated, first row a header naming the
    /// attributes. Quoting is not part of the dialect; any field containing a
    /// double quote is rejected.
    ///
    /// Without `hints`, domains are inferred from the distinct values of each
    /// column, sorted lexicographically, and the schema carries no audit
    /// roles. With `hints`, the hinted schema is used as-is (columns matched
    /// by name, domains closed): values outside a hinted domain are errors.
    pub fn load_csv(path: impl AsRef<Path>, hints: Option<&Schema>) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        Self::read_csv(file, hints)
    }

    /// Same as [`Dataset::load_csv`] but from any reader.
    pub fn read_csv(reader: impl Read, hints: Option<&Schema>) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .quoting(false)
            .trim(csv::Trim::None)
            .from_reader(reader);

        let headers: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|s| s.to_string())
            .collect();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::Csv { line: 1, msg: "missing header".into() });
        }
        for h in &headers {
            reject_quotes(h, 1)?;
        }

        let mut raw_rows: Vec<csv::StringRecord> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != headers.len() {
                return Err(Error::Csv {
                    line,
                    msg: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            for field in rec.iter() {
                reject_quotes(field, line)?;
            }
            raw_rows.push(rec);
        }
        if raw_rows.is_empty() {
            return Err(Error::Csv { line: 1, msg: "no data rows".into() });
        }

        match hints {
            Some(schema) => {
                // Columns are matched to hinted attributes by name.
                let mut col_to_attr = Vec::with_capacity(headers.len());
                for h in &headers {
                    col_to_attr.push(schema.attr_index(h)?);
                }
                let mut seen = vec![false; schema.len()];
                for &ai in &col_to_attr {
                    seen[ai] = true;
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(Error::Csv {
                        line: 1,
                        msg: format!("header lacks attribute `{}`", schema.attributes[missing].name),
                    });
                }
                let mut rows = Vec::with_capacity(raw_rows.len());
                for rec in &raw_rows {
                    let mut row = vec![0u16; schema.len()];
                    for (col, field) in rec.iter().enumerate() {
                        let ai = col_to_attr[col];
                        row[ai] = schema.category_index(&schema.attributes[ai].name, field)?;
                    }
                    rows.push(row);
                }
                Dataset::new(schema.clone(), rows)
            }
            None => {
                let mut domains: Vec<std::collections::BTreeSet<String>> =
                    vec![Default::default(); headers.len()];
                for rec in &raw_rows {
                    for (col, field) in rec.iter().enumerate() {
                        if !domains[col].contains(field) {
                            domains[col].insert(field.to_string());
                        }
                    }
                }
                let attributes: Vec<Attribute> = headers
                    .iter()
                    .zip(domains)
                    .map(|(name, dom)| Attribute { name: name.clone(), domain: dom.into_iter().collect() })
                    .collect();
                let schema = Schema::new(attributes)?;
                let mut rows = Vec::with_capacity(raw_rows.len());
                for rec in &raw_rows {
                    let mut row = vec![0u16; schema.len()];
                    for (col, field) in rec.iter().enumerate() {
                        row[col] = schema.category_index(&schema.attributes[col].name, field)?;
                    }
                    rows.push(row);
                }
                Dataset::new(schema, rows)
            }
        }
    }

    /// Write as CSV (header + one line per *logical* row, i.e. weighted rows
    /// are repeated). Inverse of [`Dataset::load_csv`] for unit weights.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Never)
            .from_writer(writer);
        let names: Vec<&str> = self.schema.names().collect();
        wtr.write_record(&names).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<&str> = row
                .iter()
                .enumerate()
                .map(|(ai, &v)| self.label(ai, v))
                .collect();
            for _ in 0..self.weight(i) {
                wtr.write_record(&fields).map_err(csv_err)?;
            }
        }
        wtr.flush().map_err(|e| Error::Csv { line: 0, msg: e.to_string() })?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        self.write_csv(file)
    }

    // ---- transformations ----

    /// Collapse one attribute's domain into two classes. `split` must cover
    /// the full domain with classes {0, 1}, both nonempty.
    ///
    /// The new class labels keep the original category when a class is a
    /// singleton and otherwise join the merged categories with `|` (so an
    /// identity split leaves the dataset unchanged). The protected and
    /// decision attributes are already binary by schema invariant, hence only
    /// splittable by bijections (relabel/reorder).
    pub fn binarize(&self, attribute: &str, split: &BTreeMap<String, u8>) -> Result<Dataset> {
        let ai = self.schema.attr_index(attribute)?;
        let attr = &self.schema.attributes[ai];
        for cat in split.keys() {
            if !attr.domain.iter().any(|c| c == cat) {
                return Err(Error::UnknownCategory { attribute: attribute.into(), value: cat.clone() });
            }
        }
        let mut class_of = Vec::with_capacity(attr.domain.len());
        for cat in &attr.domain {
            match split.get(cat) {
                Some(&k @ (0 | 1)) => class_of.push(k),
                Some(&k) => {
                    return Err(Error::Schema(format!("split class {k} for `{cat}` is not 0 or 1")))
                }
                None => {
                    return Err(Error::Schema(format!(
                        "split does not cover category `{cat}` of `{attribute}`"
                    )))
                }
            }
        }
        let members = |k: u8| -> Vec<&String> {
            attr.domain.iter().zip(&class_of).filter(|(_, &c)| c == k).map(|(c, _)| c).collect()
        };
        let (zero, one) = (members(0), members(1));
        if zero.is_empty() || one.is_empty() {
            return Err(Error::Schema(format!(
                "split of `{attribute}` must map at least one category to each class"
            )));
        }

        let is_role_attr = self.schema.roles_opt().is_some_and(|r| r.protected == *attribute || r.decision == *attribute);
        if is_role_attr && (zero.len() != 1 || one.len() != 1) {
            return Err(Error::Schema(format!(
                "`{attribute}` is the protected or decision attribute; only a relabeling split is allowed"
            )));
        }

        let join = |cats: &[&String]| -> String {
            if cats.len() == 1 {
                cats[0].clone()
            } else {
                cats.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("|")
            }
        };
        let new_domain = vec![join(&zero), join(&one)];

        let mut attributes = self.schema.attributes.clone();
        attributes[ai] = Attribute { name: attribute.into(), domain: new_domain };
        let schema = Schema::build(attributes, self.schema.roles.clone())?;

        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut r = row.clone();
                r[ai] = u16::from(class_of[usize::from(row[ai])]);
                r
            })
            .collect();
        Dataset::with_weights(schema, rows, self.weights.clone())
    }

    // ---- counting ----

    fn matches(&self, row: &[u16], resolved: &[(usize, u16)]) -> bool {
        resolved.iter().all(|&(ai, v)| row[ai] == v)
    }

    /// Weighted number of rows matching the assignment.
    pub fn count(&self, a: &Assignment) -> Result<u64> {
        let resolved = self.schema.resolve(a)?;
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| self.matches(row, &resolved))
            .map(|(i, _)| self.weight(i))
            .sum())
    }

    /// Exact empirical conditional probability Pr(event | given), as a ratio
    /// of weighted counts. Conditioning on an empty subpopulation is an
    /// explicit error, never NaN.
    pub fn empirical_prob(&self, event: &Assignment, given: &Assignment) -> Result<f64> {
        self.schema.resolve(event)?;
        let gv = self.schema.resolve(given)?;
        // Bindings that conflict between event and given match no row at all.
        let ev = match event.merged(given) {
            Ok(m) => Some(self.schema.resolve(&m)?),
            Err(_) => None,
        };
        let mut n_given = 0u64;
        let mut n_both = 0u64;
        for (i, row) in self.rows.iter().enumerate() {
            if self.matches(row, &gv) {
                n_given += self.weight(i);
                if let Some(ev) = &ev {
                    if self.matches(row, ev) {
                        n_both += self.weight(i);
                    }
                }
            }
        }
        if n_given == 0 {
            return Err(Error::UndefinedProbability(format!("no rows match {given}")));
        }
        Ok(n_both as f64 / n_given as f64)
    }

    /// Exact 2x2 contingency table over (C, E) within the subpopulation
    /// selected by `conditioning`, which must bind neither C nor E. An empty
    /// subpopulation yields an all-zero table.
    pub fn contingency(&self, conditioning: &Assignment) -> Result<ContingencyTable> {
        let (ci, cneg, _) = self.schema.protected_coords()?;
        let (ei, epos, _) = self.schema.decision_coords()?;
        let roles = self.schema.roles()?;
        if conditioning.contains(&roles.protected) || conditioning.contains(&roles.decision) {
            return Err(Error::Schema(
                "contingency conditioning must not bind the protected or decision attribute".into(),
            ));
        }
        let resolved = self.schema.resolve(conditioning)?;
        let mut t = ContingencyTable {
            conditioning: conditioning.clone(),
            n_cn_ep: 0,
            n_cn_en: 0,
            n_cp_ep: 0,
            n_cp_en: 0,
        };
        for (i, row) in self.rows.iter().enumerate() {
            if !self.matches(row, &resolved) {
                continue;
            }
            let w = self.weight(i);
            match (row[ci] == cneg, row[ei] == epos) {
                (true, true) => t.n_cn_ep += w,
                (true, false) => t.n_cn_en += w,
                (false, true) => t.n_cp_ep += w,
                (false, false) => t.n_cp_en += w,
            }
        }
        Ok(t)
    }

    /// One contingency table per value assignment of `attrs` observed in the
    /// data, in canonical (attribute-sorted label) order. Single pass.
    pub fn group_tables(&self, attrs: &[String]) -> Result<Vec<(Assignment, ContingencyTable)>> {
        let (ci, cneg, _) = self.schema.protected_coords()?;
        let (ei, epos, _) = self.schema.decision_coords()?;
        let roles = self.schema.roles()?;
        let mut idxs = Vec::with_capacity(attrs.len());
        for a in attrs {
            if *a == roles.protected || *a == roles.decision {
                return Err(Error::Schema(format!(
                    "grouping attribute `{a}` must not be the protected or decision attribute"
                )));
            }
            idxs.push(self.schema.attr_index(a)?);
        }
        idxs.sort_unstable();

        let mut groups: HashMap<Vec<u16>, [u64; 4]> = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            let key: Vec<u16> = idxs.iter().map(|&ai| row[ai]).collect();
            let cells = groups.entry(key).or_default();
            let w = self.weight(i);
            let slot = match (row[ci] == cneg, row[ei] == epos) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            cells[slot] += w;
        }

        let mut keys: Vec<Vec<u16>> = groups.keys().cloned().collect();
        keys.sort_unstable();
        let mut out = Vec::with_capacity(keys.len());
        for key in keys {
            let cells = groups[&key];
            let mut q = Assignment::new();
            for (&ai, &v) in idxs.iter().zip(&key) {
                q.set(&self.schema.attributes[ai].name, self.label(ai, v));
            }
            out.push((
                q.clone(),
                ContingencyTable {
                    conditioning: q,
                    n_cn_ep: cells[0],
                    n_cn_en: cells[1],
                    n_cp_ep: cells[2],
                    n_cp_en: cells[3],
                },
            ));
        }
        Ok(out)
    }
}

fn reject_quotes(field: &str, line: u64) -> Result<()> {
    if field.contains('"') {
        return Err(Error::Csv {
            line,
            msg: "quoted fields are not part of the accepted csv dialect".into(),
        });
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Csv { line, msg: e.to_string() }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}
