use std::collections::{BTreeMap, HashSet};

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::Warning;
use crate::corpus::{Concept, ConceptId, Shot};
use crate::error::{Error, Location, Result};

const CONCEPTS: &str = "concepts";
const CONTEXTS: &str = "contexts";

const RESULT_TAG: &str = "videoFeatureExtractionFeatureResult";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedConcepts {
    pub concepts: Vec<Concept>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextMemberRecord {
    pub concept_id: ConceptId,
    pub concept_name: Option<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub num: i64,
    pub name: String,
    pub declared_count: Option<usize>,
    pub members: Vec<ContextMemberRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedContexts {
    pub contexts: Vec<ContextRecord>,
    pub warnings: Vec<Warning>,
}

fn location_at(text: &str, offset: usize) -> Location {
    let offset = offset.min(text.len());
    let prefix = &text.as_bytes()[..offset];
    let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = prefix
        .iter()
        .rposition(|&b| b == b'\n')
        .map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&prefix[line_start..])
        .chars()
        .count()
        + 1;
    Location { line, column }
}

fn decode(bytes: &[u8]) -> Result<&str> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let valid = &bytes[..e.valid_up_to()];
        let text = std::str::from_utf8(valid).unwrap_or_default();
        Error::Xml {
            location: location_at(text, text.len()),
            message: "input is not valid UTF-8".into(),
        }
    })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// Pull-parser wrapper that tracks element nesting and converts offsets to
/// line/column positions.
struct XmlCursor<'a> {
    text: &'a str,
    reader: Reader<&'a [u8]>,
    open: Vec<String>,
    event_start: usize,
    // (offset, line, byte offset of that line's start) of the last lookup.
    line_cache: std::cell::Cell<(usize, usize, usize)>,
}

enum Node<'a> {
    Open(BytesStart<'a>, bool),
    Close,
    Eof,
}

impl<'a> XmlCursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut reader = Reader::from_reader(text.as_bytes());
        reader.config_mut().check_end_names = true;
        XmlCursor {
            text,
            reader,
            open: Vec::new(),
            event_start: 0,
            line_cache: std::cell::Cell::new((0, 1, 0)),
        }
    }

    /// Position of the current event. Scans forward from the previous lookup.
    fn here(&self) -> Location {
        let offset = self.event_start.min(self.text.len());
        let (from, mut line, mut line_start) = self.line_cache.get();
        if offset < from {
            return location_at(self.text, offset);
        }
        for (i, &b) in self.text.as_bytes()[from..offset].iter().enumerate() {
            if b == b'\n' {
                line += 1;
                line_start = from + i + 1;
            }
        }
        self.line_cache.set((offset, line, line_start));
        let column = self.text[line_start..offset].chars().count() + 1;
        Location { line, column }
    }

    fn xml_error(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Xml {
            location: location_at(self.text, offset),
            message: message.into(),
        }
    }

    /// Consumes the root element, which must be `<name>`; true when it is self-closed.
    fn open_root(&mut self, name: &str) -> Result<bool> {
        match self.next()? {
            Node::Open(e, empty) if tag_name(&e) == name => Ok(empty),
            Node::Open(e, _) => Err(Error::Xml {
                location: self.here(),
                message: format!("expected root <{name}>, found <{}>", tag_name(&e)),
            }),
            Node::Close => Err(self.xml_error(self.event_start, "end tag before root element")),
            Node::Eof => Err(self.xml_error(self.text.len(), "document has no root element")),
        }
    }

    /// Next structural event; text, comments and declarations are skipped.
    fn next(&mut self) -> Result<Node<'a>> {
        loop {
            self.event_start = self.reader.buffer_position() as usize;
            let event = self.reader.read_event().map_err(|e| {
                let pos = self.reader.error_position() as usize;
                self.xml_error(pos, e.to_string())
            })?;
            match event {
                Event::Start(e) => {
                    self.open
                        .push(String::from_utf8_lossy(e.local_name().as_ref()).into_owned());
                    return Ok(Node::Open(e, false));
                }
                Event::Empty(e) => return Ok(Node::Open(e, true)),
                Event::End(_) => {
                    self.open.pop();
                    return Ok(Node::Close);
                }
                Event::Eof => {
                    if let Some(tag) = self.open.last() {
                        return Err(self.xml_error(
                            self.text.len(),
                            format!("unexpected end of document, <{tag}> is not closed"),
                        ));
                    }
                    return Ok(Node::Eof);
                }
                _ => continue,
            }
        }
    }

    /// Skips the body of an element that was just opened (non-empty).
    fn skip_element(&mut self) -> Result<()> {
        let depth = self.open.len();
        while self.open.len() >= depth {
            if let Node::Eof = self.next()? {
                break;
            }
        }
        Ok(())
    }

    fn attributes(&self, e: &BytesStart<'_>) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.xml_error(self.event_start, err.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|err| self.xml_error(self.event_start, err.to_string()))?
                .into_owned();
            out.insert(key, value);
        }
        Ok(out)
    }
}

fn tag_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).into_owned()
}

fn first_attr<'m>(attrs: &'m BTreeMap<String, String>, keys: &[&str]) -> Option<&'m str> {
    keys.iter().find_map(|k| attrs.get(*k)).map(|v| v.trim())
}

fn parse_number<T: std::str::FromStr>(value: &str, what: &str, at: Location) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("{at}: {what} {value:?} is not a valid integer")))
}

/// Parses the concept → shots XML. Accepts both the `#Num`/`seqNum` and the
/// `fNum`/`segNum` attribute spellings.
pub fn parse_concept_shots_xml(bytes: &[u8]) -> Result<ParsedConcepts> {
    let text = decode(bytes)?;
    let mut cur = XmlCursor::new(text);
    let mut out = ParsedConcepts::default();
    let mut seen: BTreeMap<ConceptId, Location> = BTreeMap::new();

    let root_empty = cur.open_root("concept")?;
    if root_empty {
        return Ok(out);
    }

    loop {
        match cur.next()? {
            Node::Close | Node::Eof => break,
            Node::Open(e, empty) => {
                let at = cur.here();
                if tag_name(&e) != RESULT_TAG {
                    out.warnings.push(Warning {
                        source: CONCEPTS,
                        location: Some(at),
                        message: format!("ignoring unexpected element <{}>", tag_name(&e)),
                    });
                    if !empty {
                        cur.skip_element()?;
                    }
                    continue;
                }
                let attrs = cur.attributes(&e)?;
                let raw_id = first_attr(&attrs, &["fNum", "#Num", "Num"]).ok_or_else(|| {
                    Error::Validation(format!("{at}: concept element has no fNum/#Num id"))
                })?;
                let id = ConceptId(parse_number(raw_id, "concept id", at)?);
                if let Some(prev) = seen.insert(id, at) {
                    return Err(Error::Validation(format!(
                        "duplicate concept id {id} at {prev} and {at}"
                    )));
                }
                let name = match first_attr(&attrs, &["ConceptName"]).filter(|n| !n.is_empty()) {
                    Some(n) => n.to_owned(),
                    None => {
                        out.warnings.push(Warning {
                            source: CONCEPTS,
                            location: Some(at),
                            message: format!("concept {id} has no ConceptName, using concept_{id}"),
                        });
                        format!("concept_{id}")
                    }
                };
                let mut concept = Concept {
                    id,
                    name,
                    shots: Vec::new(),
                };
                if !empty {
                    parse_items(&mut cur, &mut concept, &mut out.warnings)?;
                }
                out.concepts.push(concept);
            }
        }
    }
    Ok(out)
}

fn parse_items(
    cur: &mut XmlCursor<'_>,
    concept: &mut Concept,
    warnings: &mut Vec<Warning>,
) -> Result<()> {
    let mut shot_ids = HashSet::new();
    loop {
        match cur.next()? {
            Node::Close | Node::Eof => return Ok(()),
            Node::Open(e, empty) => {
                let at = cur.here();
                if tag_name(&e) != "item" {
                    warnings.push(Warning {
                        source: CONCEPTS,
                        location: Some(at),
                        message: format!("ignoring unexpected element <{}>", tag_name(&e)),
                    });
                    if !empty {
                        cur.skip_element()?;
                    }
                    continue;
                }
                let attrs = cur.attributes(&e)?;
                if !empty {
                    cur.skip_element()?;
                }
                let shot_id = first_attr(&attrs, &["shotId"]).unwrap_or_default();
                if shot_id.is_empty() {
                    return Err(Error::Validation(format!("{at}: item has no shotId")));
                }
                let ordinal = concept.shots.len() as u32 + 1;
                let seq_num = match first_attr(&attrs, &["seqNum", "segNum"]) {
                    Some(v) => parse_number(v, "seqNum", at)?,
                    None => {
                        warnings.push(Warning {
                            source: CONCEPTS,
                            location: Some(at),
                            message: format!("item {shot_id} has no seqNum, using {ordinal}"),
                        });
                        ordinal
                    }
                };
                if !shot_ids.insert(shot_id.to_owned()) {
                    warnings.push(Warning {
                        source: CONCEPTS,
                        location: Some(at),
                        message: format!(
                            "duplicate shot {shot_id} in concept {}, dropped",
                            concept.id
                        ),
                    });
                    continue;
                }
                let shot = Shot::new(shot_id, seq_num)
                    .map_err(|e| Error::Validation(format!("{at}: {e}")))?;
                concept.shots.push(shot);
            }
        }
    }
}

fn parse_weight(raw: &str, at: Location) -> Result<f64> {
    let normalized = raw.trim().replace(',', ".");
    let weight: f64 = normalized
        .parse()
        .map_err(|_| Error::Validation(format!("{at}: Weight {raw:?} is not numeric")))?;
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::Validation(format!(
            "{at}: Weight {raw:?} is outside [0, 1]"
        )));
    }
    Ok(weight)
}

/// Parses the context → concepts XML. Decimal commas in `Weight` are accepted.
pub fn parse_contexts_xml(bytes: &[u8]) -> Result<ParsedContexts> {
    let text = decode(bytes)?;
    let mut cur = XmlCursor::new(text);
    let mut out = ParsedContexts::default();

    let root_empty = cur.open_root("contextes")?;
    if root_empty {
        return Ok(out);
    }

    loop {
        match cur.next()? {
            Node::Close | Node::Eof => break,
            Node::Open(e, empty) => {
                let at = cur.here();
                if tag_name(&e) != "Contexte" {
                    out.warnings.push(Warning {
                        source: CONTEXTS,
                        location: Some(at),
                        message: format!("ignoring unexpected element <{}>", tag_name(&e)),
                    });
                    if !empty {
                        cur.skip_element()?;
                    }
                    continue;
                }
                let attrs = cur.attributes(&e)?;
                let name = first_attr(&attrs, &["Name"])
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| Error::Validation(format!("{at}: Contexte has no Name")))?
                    .to_owned();
                let num = match first_attr(&attrs, &["Num"]) {
                    Some(v) => parse_number(v, "Num", at)?,
                    None => 0,
                };
                let declared_count = first_attr(&attrs, &["Nbrconcept"])
                    .map(|v| parse_number(v, "Nbrconcept", at))
                    .transpose()?;
                let mut ctx = ContextRecord {
                    num,
                    name,
                    declared_count,
                    members: Vec::new(),
                };
                if !empty {
                    parse_members(&mut cur, &mut ctx, &mut out.warnings)?;
                }
                if let Some(declared) = ctx.declared_count {
                    if declared != ctx.members.len() {
                        out.warnings.push(Warning {
                            source: CONTEXTS,
                            location: Some(at),
                            message: format!(
                                "context {:?} declares Nbrconcept={declared} but lists {}",
                                ctx.name,
                                ctx.members.len()
                            ),
                        });
                    }
                }
                out.contexts.push(ctx);
            }
        }
    }
    Ok(out)
}

fn parse_members(
    cur: &mut XmlCursor<'_>,
    ctx: &mut ContextRecord,
    warnings: &mut Vec<Warning>,
) -> Result<()> {
    loop {
        match cur.next()? {
            Node::Close | Node::Eof => return Ok(()),
            Node::Open(e, empty) => {
                let at = cur.here();
                let tag = tag_name(&e);
                let attrs = cur.attributes(&e)?;
                if !empty {
                    cur.skip_element()?;
                }
                if tag != "concept" {
                    warnings.push(Warning {
                        source: CONTEXTS,
                        location: Some(at),
                        message: format!("ignoring unexpected element <{tag}>"),
                    });
                    continue;
                }
                let raw_id = first_attr(&attrs, &["ConceptId"])
                    .ok_or_else(|| Error::Validation(format!("{at}: concept has no ConceptId")))?;
                let concept_id = ConceptId(parse_number(raw_id, "ConceptId", at)?);
                let weight = match first_attr(&attrs, &["Weight"]) {
                    Some(raw) => parse_weight(raw, at)?,
                    None => {
                        warnings.push(Warning {
                            source: CONTEXTS,
                            location: Some(at),
                            message: format!("concept {concept_id} has no Weight, using 1"),
                        });
                        1.0
                    }
                };
                ctx.members.push(ContextMemberRecord {
                    concept_id,
                    concept_name: first_attr(&attrs, &["ConceptName"])
                        .filter(|n| !n.is_empty())
                        .map(str::to_owned),
                    weight,
                });
            }
        }
    }
}

/// Canonical concept-shots document (`fNum` / `segNum` spelling).
pub fn write_concept_shots_xml(concepts: &[Concept]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<concept>\n");
    for c in concepts {
        out.push_str(&format!(
            "  <{RESULT_TAG} fNum=\"{}\" ConceptName=\"{}\">\n",
            c.id,
            escape(c.name.as_str())
        ));
        for s in &c.shots {
            out.push_str(&format!(
                "    <item segNum=\"{}\" shotId=\"{}\"/>\n",
                s.seq_num,
                escape(s.shot_id.as_str())
            ));
        }
        out.push_str(&format!("  </{RESULT_TAG}>\n"));
    }
    out.push_str("</concept>\n");
    out
}

/// Canonical contexts document. Weights are written with a decimal point.
pub fn write_contexts_xml(contexts: &[ContextRecord]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<contextes>\n");
    for ctx in contexts {
        out.push_str(&format!(
            "  <Contexte Num=\"{}\" Name=\"{}\" Nbrconcept=\"{}\">\n",
            ctx.num,
            escape(ctx.name.as_str()),
            ctx.declared_count.unwrap_or(ctx.members.len())
        ));
        for m in &ctx.members {
            out.push_str(&format!("    <concept ConceptId=\"{}\"", m.concept_id));
            if let Some(name) = &m.concept_name {
                out.push_str(&format!(" ConceptName=\"{}\"", escape(name.as_str())));
            }
            out.push_str(&format!(" Weight=\"{}\"/>\n", m.weight));
        }
        out.push_str("  </Contexte>\n");
    }
    out.push_str("</contextes>\n");
    out
}
