/// Messaging pattern of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Every message goes to every subscriber.
    PubSub,
    /// Every message goes to exactly one puller, round-robin.
    PushPull,
}

pub type ChannelId = usize;

/// Backend-independent routing state of one logical channel: a single source
/// and any number of sinks.
#[derive(Debug, Clone)]
pub struct Channel {
    pattern: Pattern,
    source: u32,
    sinks: Vec<u32>,
    cursor: usize,
}

impl Channel {
    pub fn new(pattern: Pattern, source: u32) -> Self {
        Channel {
            pattern,
            source,
            sinks: Vec::new(),
            cursor: 0,
        }
    }

    pub fn pattern(&self) -> Pattern {
        self.pattern
    }

    pub fn source(&self) -> u32 {
        self.source
    }

    pub fn sinks(&self) -> &[u32] {
        &self.sinks
    }

    pub fn attach(&mut self, sink: u32) {
        if !self.sinks.contains(&sink) {
            self.sinks.push(sink);
        }
    }

    /// Destinations of the next message.
    pub fn route(&mut self) -> Vec<u32> {
        match self.pattern {
            Pattern::PubSub => self.sinks.clone(),
            Pattern::PushPull => {
                if self.sinks.is_empty() {
                    return Vec::new();
                }
                let to = self.sinks[self.cursor % self.sinks.len()];
                self.cursor = (self.cursor + 1) % self.sinks.len();
                vec![to]
            }
        }
    }
}

/// Find the channel with this pattern and source, creating it if needed.
pub(crate) fn open_in(channels: &mut Vec<Channel>, pattern: Pattern, source: u32) -> ChannelId {
    if let Some(i) = channels
        .iter()
        .position(|c| c.pattern == pattern && c.source == source)
    {
        return i;
    }
    channels.push(Channel::new(pattern, source));
    channels.len() - 1
}
