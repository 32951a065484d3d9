use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coalition::{Coalition, PlayerSet};
use crate::error::{Error, Result};
use crate::game::GameKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Object,
    Relation,
    Attribute,
    Background,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Object => "object",
            Role::Relation => "relation",
            Role::Attribute => "attribute",
            Role::Background => "background",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionTag {
    Object1,
    Object2,
    Background,
}

impl RegionTag {
    pub fn name(self) -> &'static str {
        match self {
            RegionTag::Object1 => "object1",
            RegionTag::Object2 => "object2",
            RegionTag::Background => "background",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Relation,
    Attribute,
    Object,
}

impl Aspect {
    pub fn name(self) -> &'static str {
        match self {
            Aspect::Relation => "relation",
            Aspect::Attribute => "attribute",
            Aspect::Object => "object",
        }
    }

    /// Text categories compared for this aspect.
    pub fn text_family(self) -> [Category; 3] {
        match self {
            Aspect::Relation | Aspect::Object => [Category::Object, Category::Relation, Category::RelationObject],
            Aspect::Attribute => [Category::Object, Category::Attribute, Category::AttributeObject],
        }
    }

    /// The interaction category of this aspect (R&O or A&O).
    pub fn compound(self) -> Category {
        self.text_family()[2]
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    Swap,
    Replace,
    Add,
}

/// A selection of caption players by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Object,
    Relation,
    Attribute,
    RelationObject,
    AttributeObject,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Object,
        Category::Relation,
        Category::Attribute,
        Category::RelationObject,
        Category::AttributeObject,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Object => "O",
            Category::Relation => "R",
            Category::Attribute => "A",
            Category::RelationObject => "R&O",
            Category::AttributeObject => "A&O",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }

    pub fn roles(self) -> &'static [Role] {
        match self {
            Category::Object => &[Role::Object],
            Category::Relation => &[Role::Relation],
            Category::Attribute => &[Role::Attribute],
            Category::RelationObject => &[Role::Relation, Role::Object],
            Category::AttributeObject => &[Role::Attribute, Role::Object],
        }
    }
}

/// A selection of image regions by object tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionSelector {
    Object1,
    Object2,
    Both,
}

impl RegionSelector {
    pub const ALL: [RegionSelector; 3] = [RegionSelector::Object1, RegionSelector::Object2, RegionSelector::Both];

    pub fn label(self) -> &'static str {
        match self {
            RegionSelector::Object1 => "O1",
            RegionSelector::Object2 => "O2",
            RegionSelector::Both => "O1&O2",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }

    pub fn tags(self) -> &'static [RegionTag] {
        match self {
            RegionSelector::Object1 => &[RegionTag::Object1],
            RegionSelector::Object2 => &[RegionTag::Object2],
            RegionSelector::Both => &[RegionTag::Object1, RegionTag::Object2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectGroup {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

/// Role of every caption player, plus which object mention it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAssignment {
    roles: Vec<Role>,
    groups: Vec<Option<ObjectGroup>>,
}

impl RoleAssignment {
    pub fn new(roles: Vec<Role>, groups: Vec<Option<ObjectGroup>>) -> Self {
        assert_eq!(roles.len(), groups.len());
        Self { roles, groups }
    }

    pub fn from_roles(roles: Vec<Role>) -> Self {
        let groups = vec![None; roles.len()];
        Self { roles, groups }
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn groups(&self) -> &[Option<ObjectGroup>] {
        &self.groups
    }

    pub fn role_coalition(&self, role: Role) -> Coalition {
        let members = self
            .roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| i);
        Coalition::from_indices(self.roles.len(), members).expect("indices within the caption")
    }

    /// Players of `category`, or `None` if any constituent role is absent.
    pub fn category(&self, category: Category) -> Option<Coalition> {
        let mut out = Coalition::empty(self.roles.len());
        for &role in category.roles() {
            let part = self.role_coalition(role);
            if part.is_empty() {
                return None;
            }
            out = out.union(part);
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAssignment {
    tags: Vec<RegionTag>,
}

impl RegionAssignment {
    pub fn new(tags: Vec<RegionTag>) -> Self {
        Self { tags }
    }

    pub fn tags(&self) -> &[RegionTag] {
        &self.tags
    }

    pub fn tag_coalition(&self, tag: RegionTag) -> Coalition {
        let members = self.tags.iter().enumerate().filter(|(_, t)| **t == tag).map(|(i, _)| i);
        Coalition::from_indices(self.tags.len(), members).expect("indices within the image")
    }

    pub fn selection(&self, selector: RegionSelector) -> Option<Coalition> {
        let mut out = Coalition::empty(self.tags.len());
        for &tag in selector.tags() {
            let part = self.tag_coalition(tag);
            if part.is_empty() {
                return None;
            }
            out = out.union(part);
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caption {
    pub id: String,
    pub players: PlayerSet,
    pub roles: RoleAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub id: String,
    pub players: PlayerSet,
    pub regions: RegionAssignment,
}

/// One diagnostic unit: an image-caption pair and its minimally perturbed counterparts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePair {
    pub sample_id: String,
    pub aspect: Aspect,
    pub perturbation: Perturbation,
    pub image_1: Image,
    pub image_2: Option<Image>,
    pub caption_1: Caption,
    pub caption_2: Caption,
}

impl SamplePair {
    pub fn game_key(&self, image: &Image, caption: &Caption) -> GameKey {
        GameKey::new(&self.sample_id, &image.id, &caption.id)
    }

    pub fn require_image_2(&self) -> Result<&Image> {
        self.image_2.as_ref().ok_or_else(|| Error::MissingCounterpart {
            sample: self.sample_id.clone(),
            what: "image_2".into(),
        })
    }

    pub(crate) fn text_category(&self, caption: &Caption, which: &str, category: Category) -> Result<Coalition> {
        caption.roles.category(category).ok_or_else(|| Error::MissingRole {
            sample: self.sample_id.clone(),
            what: which.into(),
            role: category.label().into(),
        })
    }

    pub(crate) fn region(&self, image: &Image, which: &str, selector: RegionSelector) -> Result<Coalition> {
        image.regions.selection(selector).ok_or_else(|| Error::MissingRegion {
            sample: self.sample_id.clone(),
            what: which.into(),
            region: selector.label().into(),
        })
    }
}
