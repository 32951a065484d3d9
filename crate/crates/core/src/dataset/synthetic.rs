use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::record::{CaptionRecord, ImageRecord, RegionRecord, SampleRecord, TextPlayerRecord, SCHEMA_VERSION};
use crate::metrics::{Aspect, ObjectGroup, Perturbation, RegionTag, Role, SamplePair};
use crate::oracles::derive_seed;

const OBJECTS: &[&str] = &[
    "horse", "grass", "dog", "cat", "man", "table", "cup", "car", "tree", "bike", "girl", "shirt",
];
const RELATIONS: &[&str] = &[
    "eating", "on", "under", "holding", "behind", "riding", "wearing", "near",
];
const ATTRIBUTES: &[&str] = &["red", "blue", "small", "large", "wooden", "striped", "old", "white"];
const FILLERS: &[&str] = &["the", "a", "of", "is", "with", "some"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub samples: usize,
    pub aspect: Aspect,
    /// Extra background words per caption.
    pub filler_tokens: usize,
    /// Extra background regions per image.
    pub filler_regions: usize,
    /// Attach a second image with the same objects in a different arrangement.
    pub second_image: bool,
}

impl SyntheticConfig {
    pub fn new(seed: u64, samples: usize, aspect: Aspect) -> Self {
        Self {
            seed,
            samples,
            aspect,
            filler_tokens: 0,
            filler_regions: 0,
            second_image: true,
        }
    }
}

fn player(label: &str, role: Role, group: Option<ObjectGroup>) -> TextPlayerRecord {
    TextPlayerRecord {
        label: label.into(),
        role: Some(role),
        group,
    }
}

/// Swap-perturbed samples following the caption templates of each aspect.
///
/// Relation and object samples read "[object 1] [relation] [object 2]" with
/// the objects swapped in caption 2; attribute samples read "[attribute 1]
/// [object 1] [attribute 2] [object 2]" with the attributes swapped.
pub fn synthetic_samples(config: SyntheticConfig) -> Vec<SamplePair> {
    (0..config.samples)
        .map(|i| {
            let record = synthetic_record(config, i);
            record.to_sample(SCHEMA_VERSION).expect("generated records are valid")
        })
        .collect()
}

fn synthetic_record(config: SyntheticConfig, index: usize) -> SampleRecord {
    let id = format!("{}-{index:04}", config.aspect.name());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["synthetic", &id]));
    let objects: Vec<&str> = OBJECTS.choose_multiple(&mut rng, 2).copied().collect();
    let (o1, o2) = (objects[0], objects[1]);
    let fillers: Vec<String> = (0..config.filler_tokens)
        .map(|k| format!("{}#{k}", FILLERS.choose(&mut rng).expect("nonempty")))
        .collect();

    let (first, second) = match config.aspect {
        Aspect::Relation | Aspect::Object => {
            let rel = *RELATIONS.choose(&mut rng).expect("nonempty");
            let make = |a: &str, b: &str| {
                vec![
                    player(a, Role::Object, Some(ObjectGroup::First)),
                    player(rel, Role::Relation, None),
                    player(b, Role::Object, Some(ObjectGroup::Second)),
                ]
            };
            (make(o1, o2), make(o2, o1))
        }
        Aspect::Attribute => {
            let attrs: Vec<&str> = ATTRIBUTES.choose_multiple(&mut rng, 2).copied().collect();
            let make = |a: &str, b: &str| {
                vec![
                    player(a, Role::Attribute, None),
                    player(o1, Role::Object, Some(ObjectGroup::First)),
                    player(b, Role::Attribute, None),
                    player(o2, Role::Object, Some(ObjectGroup::Second)),
                ]
            };
            (make(attrs[0], attrs[1]), make(attrs[1], attrs[0]))
        }
    };
    let with_fillers = |mut players: Vec<TextPlayerRecord>| {
        for (k, f) in fillers.iter().enumerate() {
            // spread fillers through the caption deterministically
            let at = (k * 2 + 1).min(players.len());
            players.insert(at, player(f, Role::Background, None));
        }
        players
    };

    let regions = |rng: &mut ChaCha8Rng| {
        let mut regions = vec![
            RegionRecord {
                label: o1.into(),
                tag: RegionTag::Object1,
            },
            RegionRecord {
                label: o2.into(),
                tag: RegionTag::Object2,
            },
            RegionRecord {
                label: "background".into(),
                tag: RegionTag::Background,
            },
        ];
        for k in 0..config.filler_regions {
            regions.push(RegionRecord {
                label: format!("region#{k}"),
                tag: RegionTag::Background,
            });
        }
        if rng.random_bool(0.5) {
            regions.swap(0, 1);
        }
        regions
    };
    let image_1 = ImageRecord {
        id: format!("{id}/i1"),
        file: None,
        regions: regions(&mut rng),
    };
    let image_2 = config.second_image.then(|| ImageRecord {
        id: format!("{id}/i2"),
        file: None,
        regions: regions(&mut rng),
    });
    SampleRecord {
        schema_version: SCHEMA_VERSION,
        sample_id: id.clone(),
        aspect: config.aspect,
        perturbation: Perturbation::Swap,
        caption_1: CaptionRecord {
            id: format!("{id}/t1"),
            players: with_fillers(first),
        },
        caption_2: CaptionRecord {
            id: format!("{id}/t2"),
            players: with_fillers(second),
        },
        image_1,
        image_2,
        extensions: Default::default(),
    }
}
