use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::coalition::{Modality, PlayerSet};
use crate::metrics::{
    Aspect, Caption, Image, ObjectGroup, Perturbation, RegionAssignment, RegionTag, Role, RoleAssignment, SamplePair,
};

/// Newest sample schema version this crate reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextPlayerRecord {
    pub label: String,
    // optional here so a missing role is reported with the player index
    #[serde(default)]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<ObjectGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptionRecord {
    pub id: String,
    pub players: Vec<TextPlayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionRecord {
    pub label: String,
    pub tag: RegionTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    /// External reference to the image file, passed through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub regions: Vec<RegionRecord>,
}

/// One line of a sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub schema_version: u32,
    pub sample_id: String,
    pub aspect: Aspect,
    pub perturbation: Perturbation,
    pub caption_1: CaptionRecord,
    pub caption_2: CaptionRecord,
    pub image_1: ImageRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_2: Option<ImageRecord>,
    /// Source-specific fields, reserved for converters.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extensions: Map<String, Value>,
}

impl SampleRecord {
    /// Checks the record and builds the in-memory sample.
    pub fn to_sample(&self, max_schema_version: u32) -> std::result::Result<SamplePair, String> {
        if self.schema_version == 0 || self.schema_version > max_schema_version {
            return Err(format!(
                "schema_version {} is not supported (newest known is {max_schema_version})",
                self.schema_version
            ));
        }
        if self.sample_id.is_empty() {
            return Err("sample_id is empty".into());
        }
        if self.caption_1.id == self.caption_2.id {
            return Err(format!("caption_1 and caption_2 share the id {:?}", self.caption_1.id));
        }
        if let Some(image_2) = &self.image_2 {
            if image_2.id == self.image_1.id {
                return Err(format!("image_1 and image_2 share the id {:?}", self.image_1.id));
            }
        }
        let caption_1 = caption("caption_1", &self.caption_1)?;
        let caption_2 = caption("caption_2", &self.caption_2)?;
        if self.perturbation == Perturbation::Swap && multiset(&self.caption_1) != multiset(&self.caption_2) {
            return Err("swap captions must hold the same players in a different order".into());
        }
        let image_1 = image("image_1", &self.image_1)?;
        let image_2 = self.image_2.as_ref().map(|r| image("image_2", r)).transpose()?;
        Ok(SamplePair {
            sample_id: self.sample_id.clone(),
            aspect: self.aspect,
            perturbation: self.perturbation,
            image_1,
            image_2,
            caption_1,
            caption_2,
        })
    }

    pub fn from_sample(sample: &SamplePair) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            sample_id: sample.sample_id.clone(),
            aspect: sample.aspect,
            perturbation: sample.perturbation,
            caption_1: caption_record(&sample.caption_1),
            caption_2: caption_record(&sample.caption_2),
            image_1: image_record(&sample.image_1),
            image_2: sample.image_2.as_ref().map(image_record),
            extensions: Map::new(),
        }
    }
}

fn multiset(c: &CaptionRecord) -> BTreeMap<(&str, Option<Role>), usize> {
    let mut out = BTreeMap::new();
    for p in &c.players {
        *out.entry((p.label.as_str(), p.role)).or_insert(0) += 1;
    }
    out
}

fn caption(which: &str, r: &CaptionRecord) -> std::result::Result<Caption, String> {
    if r.players.is_empty() {
        return Err(format!("{which} has no players"));
    }
    let mut roles = Vec::with_capacity(r.players.len());
    let mut groups = Vec::with_capacity(r.players.len());
    for (i, p) in r.players.iter().enumerate() {
        let role = p
            .role
            .ok_or_else(|| format!("{which} player {i} ({:?}) has no role", p.label))?;
        if p.group.is_some() && role != Role::Object {
            return Err(format!("{which} player {i} has a group but role {}", role.name()));
        }
        roles.push(role);
        groups.push(p.group);
    }
    let labels = r.players.iter().map(|p| p.label.clone()).collect();
    let players = PlayerSet::new(Modality::Text, labels).map_err(|e| format!("{which}: {e}"))?;
    Ok(Caption {
        id: r.id.clone(),
        players,
        roles: RoleAssignment::new(roles, groups),
    })
}

fn image(which: &str, r: &ImageRecord) -> std::result::Result<Image, String> {
    if r.regions.is_empty() {
        return Err(format!("{which} has no regions"));
    }
    let mut tags_by_label: HashMap<&str, HashSet<RegionTag>> = HashMap::new();
    for reg in &r.regions {
        tags_by_label.entry(&reg.label).or_default().insert(reg.tag);
    }
    for reg in &r.regions {
        let tags = &tags_by_label[reg.label.as_str()];
        if tags.contains(&RegionTag::Object1) && tags.contains(&RegionTag::Object2) {
            return Err(format!(
                "{which} region {:?} is tagged both object1 and object2",
                reg.label
            ));
        }
    }
    let labels = r.regions.iter().map(|g| g.label.clone()).collect();
    let players = PlayerSet::new(Modality::Image, labels).map_err(|e| format!("{which}: {e}"))?;
    Ok(Image {
        id: r.id.clone(),
        players,
        regions: RegionAssignment::new(r.regions.iter().map(|g| g.tag).collect()),
    })
}

fn caption_record(c: &Caption) -> CaptionRecord {
    let players = c
        .players
        .labels()
        .iter()
        .zip(c.roles.roles())
        .zip(c.roles.groups())
        .map(|((label, &role), &group)| TextPlayerRecord {
            label: label.clone(),
            role: Some(role),
            group,
        })
        .collect();
    CaptionRecord {
        id: c.id.clone(),
        players,
    }
}

fn image_record(i: &Image) -> ImageRecord {
    ImageRecord {
        id: i.id.clone(),
        file: None,
        regions: i
            .players
            .labels()
            .iter()
            .zip(i.regions.tags())
            .map(|(label, &tag)| RegionRecord {
                label: label.clone(),
                tag,
            })
            .collect(),
    }
}

/// Builds a relation-template record "[object 1] [relation] [object 2]" with its
/// object-swapped caption and one region per object plus a background region.
pub fn relation_template_record(
    sample_id: &str,
    image_id: &str,
    subject: &str,
    relation: &str,
    object: &str,
) -> SampleRecord {
    let player = |label: &str, role: Role, group: Option<ObjectGroup>| TextPlayerRecord {
        label: label.into(),
        role: Some(role),
        group,
    };
    let caption = |id: String, first: &str, second: &str| CaptionRecord {
        id,
        players: vec![
            player(first, Role::Object, Some(ObjectGroup::First)),
            player(relation, Role::Relation, None),
            player(second, Role::Object, Some(ObjectGroup::Second)),
        ],
    };
    SampleRecord {
        schema_version: SCHEMA_VERSION,
        sample_id: sample_id.into(),
        aspect: Aspect::Relation,
        perturbation: Perturbation::Swap,
        caption_1: caption(format!("{sample_id}/t1"), subject, object),
        caption_2: caption(format!("{sample_id}/t2"), object, subject),
        image_1: ImageRecord {
            id: image_id.into(),
            file: None,
            regions: vec![
                RegionRecord {
                    label: subject.into(),
                    tag: RegionTag::Object1,
                },
                RegionRecord {
                    label: object.into(),
                    tag: RegionTag::Object2,
                },
                RegionRecord {
                    label: "background".into(),
                    tag: RegionTag::Background,
                },
            ],
        },
        image_2: None,
        extensions: Map::new(),
    }
}
