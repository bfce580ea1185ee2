//! Template-grammar corpus where each comment's first word is determined by
//! its author. Every blog is commented on by every user, so the blog alone
//! cannot predict that word but the profile can.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{RawRecord, UserProfile};
use crate::error::{Error, Result};

const TOPICS: [&str; 6] = ["match", "concert", "movie", "weather", "election", "recipe"];
const ADJECTIVES: [&str; 4] = ["big", "new", "strange", "late"];
const TIMES: [&str; 4] = ["today", "tonight", "yesterday", "tomorrow"];
const STYLES: [&str; 8] = ["wow", "meh", "lol", "sigh", "yay", "hmm", "omg", "bravo"];
const PROVINCES: [&str; 8] = ["north", "south", "east", "west", "coast", "hills", "plain", "lake"];
const HOBBIES: [&str; 8] = ["music", "sports", "films", "cooking", "travel", "books", "games", "art"];

/// Index of the user-determined token within each comment.
pub const USER_POSITION: usize = 0;

/// Maximum number of distinct blogs the grammar can produce.
pub const MAX_BLOGS: usize = TOPICS.len() * ADJECTIVES.len() * TIMES.len();

pub fn user_profile(u: usize) -> UserProfile {
    UserProfile {
        user_id: format!("user{u}"),
        province: PROVINCES[u % PROVINCES.len()].to_string(),
        city: format!("{}-city", PROVINCES[u % PROVINCES.len()]),
        gender: if u.is_multiple_of(2) { "F" } else { "M" }.to_string(),
        marital_status: if u.is_multiple_of(3) { "single" } else { "married" }.to_string(),
        age: Some(18 + 7 * u as u32),
        description_tokens: vec!["loves".into(), HOBBIES[u % HOBBIES.len()].into()],
        common_words: vec![STYLES[u % STYLES.len()].into()],
    }
}

/// The style word user `u` opens every comment with.
pub fn style_word(u: usize) -> &'static str {
    STYLES[u % STYLES.len()]
}

/// `records` comments by `users` users: blogs are sampled without replacement
/// from the grammar, each receiving one comment per user
/// (`<style> about <topic>`), truncated to `records`.
pub fn generate(records: usize, users: usize, seed: u64) -> Result<Vec<RawRecord>> {
    if users == 0 || users > STYLES.len() {
        return Err(Error::Config(format!(
            "synthetic corpus supports 1..={} users, got {users}",
            STYLES.len()
        )));
    }
    let blogs_needed = records.div_ceil(users);
    if blogs_needed > MAX_BLOGS {
        return Err(Error::Config(format!(
            "synthetic corpus supports at most {} records for {users} users",
            MAX_BLOGS * users
        )));
    }
    let mut combos: Vec<(usize, usize, usize)> = (0..TOPICS.len())
        .flat_map(|t| (0..ADJECTIVES.len()).flat_map(move |a| (0..TIMES.len()).map(move |w| (t, a, w))))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    combos.shuffle(&mut rng);

    let profiles: Vec<UserProfile> = (0..users).map(user_profile).collect();
    let mut out = Vec::with_capacity(records);
    'outer: for &(t, a, w) in combos.iter().take(blogs_needed) {
        let blog: Vec<String> = [ADJECTIVES[a], TOPICS[t], "news", TIMES[w]]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for (u, profile) in profiles.iter().enumerate() {
            if out.len() == records {
                break 'outer;
            }
            out.push(RawRecord {
                blog_tokens: blog.clone(),
                comment_tokens: vec![style_word(u).into(), "about".into(), TOPICS[t].into()],
                user: profile.clone(),
            });
        }
    }
    Ok(out)
}
