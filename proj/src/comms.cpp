#include "banditmesh/comms.hpp"

#include <algorithm>
#include <string>

#include "banditmesh/error.hpp"

namespace banditmesh {

namespace {

void check_same(const SummaryPtr& a, const SummaryPtr& b, ClientId origin, Stamp stamp) {
  if (!a || !b || a == b) return;
  if (!(*a == *b)) {
    throw IntegrityError("origin " + std::to_string(origin) + " stamp " + std::to_string(stamp) +
                         " seen with two different contents");
  }
}

}  // namespace

FiltrationView::FiltrationView(ClientId owner, std::size_t m) : owner_(owner), stamps_(m, 0), content_(m) {
  if (owner >= m) throw UsageError("filtration view: owner out of range");
}

Stamp FiltrationView::stamp(ClientId origin) const {
  if (origin >= size()) throw UsageError("filtration view: origin out of range");
  return stamps_[origin];
}

const ClientSummary* FiltrationView::summary(ClientId origin) const {
  if (origin >= size()) throw UsageError("filtration view: origin out of range");
  return content_[origin].get();
}

std::vector<ClientId> FiltrationView::known_origins() const {
  std::vector<ClientId> out;
  for (ClientId j = 0; j < size(); ++j) {
    if (stamps_[j] > 0) out.push_back(j);
  }
  return out;
}

void FiltrationView::record_own(Stamp t, SummaryPtr content) {
  if (t <= stamps_[owner_]) {
    throw SequencingError("filtration view: own stamp must increase (have " + std::to_string(stamps_[owner_]) +
                          ", got " + std::to_string(t) + ")");
  }
  if (content && (content->origin != owner_ || content->stamp != t)) {
    throw UsageError("filtration view: own summary must carry the owner id and stamp");
  }
  stamps_[owner_] = t;
  content_[owner_] = std::move(content);
}

bool FiltrationView::offer(const MessageEntry& entry) {
  if (entry.origin >= size()) throw UsageError("filtration view: origin out of range");
  Stamp& have = stamps_[entry.origin];
  if (entry.stamp > have) {
    have = entry.stamp;
    content_[entry.origin] = entry.content;
    return true;
  }
  if (entry.stamp == have && entry.stamp > 0) {
    check_same(content_[entry.origin], entry.content, entry.origin, entry.stamp);
    if (!content_[entry.origin]) content_[entry.origin] = entry.content;
  }
  return false;
}

Message make_message(const FiltrationView& view, Stamp t) {
  if (view.stamp(view.owner()) != t) {
    throw SequencingError("make_message: view of client " + std::to_string(view.owner()) + " is not current at round " +
                          std::to_string(t));
  }
  Message msg{view.owner(), {}};
  for (ClientId j : view.known_origins()) {
    const ClientSummary* s = view.summary(j);
    msg.entries.push_back({j, view.stamp(j), s ? std::make_shared<const ClientSummary>(*s) : nullptr});
  }
  return msg;
}

FiltrationView merge(FiltrationView view, std::span<const Message> incoming) {
  for (const Message& msg : incoming) {
    for (const MessageEntry& e : msg.entries) view.offer(e);
  }
  return view;
}

std::size_t staleness(const FiltrationView& view, std::size_t t) {
  std::size_t worst = 0;
  for (ClientId j = 0; j < view.size(); ++j) {
    const std::size_t s = view.stamp(j);
    if (t > s) worst = std::max(worst, t - s);
  }
  return worst;
}

// ---------------------------------------------------------------------------

GossipNetwork::GossipNetwork(std::size_t m, std::vector<ClientId> content_origins)
    : m_(m), stamps_(m * m, 0), next_stamps_(m * m, 0) {
  if (m == 0) throw UsageError("gossip network: at least one client required");
  carry_content(std::move(content_origins));
}

void GossipNetwork::carry_content(std::vector<ClientId> content_origins) {
  column_.assign(m_, -1);
  content_origins_ = std::move(content_origins);
  for (std::size_t c = 0; c < content_origins_.size(); ++c) {
    const ClientId o = content_origins_[c];
    if (o >= m_) throw UsageError("gossip network: content origin out of range");
    if (column_[o] >= 0) throw UsageError("gossip network: duplicate content origin");
    column_[o] = static_cast<int>(c);
  }
  content_.assign(m_ * content_origins_.size(), nullptr);
  next_content_.assign(content_.size(), nullptr);
}

GossipNetwork GossipNetwork::with_all_content(std::size_t m) {
  std::vector<ClientId> all(m);
  for (std::size_t j = 0; j < m; ++j) all[j] = static_cast<ClientId>(j);
  return GossipNetwork(m, std::move(all));
}

void GossipNetwork::publish(ClientId m, Stamp t, SummaryPtr content) {
  if (m >= m_) throw UsageError("gossip network: client out of range");
  Stamp& own = stamps_[static_cast<std::size_t>(m) * m_ + m];
  if (t <= own) throw SequencingError("gossip network: own stamp must increase");
  own = t;
  const int c = column_[m];
  if (c >= 0) {
    if (content && (content->origin != m || content->stamp != t)) {
      throw UsageError("gossip network: published summary must carry the client id and stamp");
    }
    content_[static_cast<std::size_t>(m) * content_origins_.size() + static_cast<std::size_t>(c)] = std::move(content);
  }
}

void GossipNetwork::exchange(const GraphSnapshot& snapshot, std::span<const char> muted, const TraceSink* trace) {
  if (snapshot.size() != m_) throw UsageError("gossip network: snapshot size mismatch");
  if (!muted.empty() && muted.size() != m_) throw UsageError("gossip network: muted mask size mismatch");
  const std::size_t cols = content_origins_.size();
  next_stamps_ = stamps_;
  next_content_ = content_;

  auto deliver = [&](ClientId from, ClientId to) {
    const Stamp* src = stamps_.data() + static_cast<std::size_t>(from) * m_;
    Stamp* dst = next_stamps_.data() + static_cast<std::size_t>(to) * m_;
    for (std::size_t c = 0; c < cols; ++c) {
      const ClientId o = content_origins_[c];
      const SummaryPtr& in = content_[static_cast<std::size_t>(from) * cols + c];
      SummaryPtr& out = next_content_[static_cast<std::size_t>(to) * cols + c];
      if (src[o] > dst[o]) {
        out = in;
      } else if (src[o] == dst[o] && src[o] > 0) {
        check_same(out, in, o, src[o]);
        if (!out) out = in;
      }
    }
    if (trace != nullptr) {
      for (std::size_t j = 0; j < m_; ++j) {
        if (src[j] > dst[j]) (*trace)(snapshot.round(), from, to, static_cast<ClientId>(j), src[j]);
      }
    }
    for (std::size_t j = 0; j < m_; ++j) dst[j] = std::max(dst[j], src[j]);
  };

  for (const auto& [a, b] : snapshot.edges()) {
    if (!muted.empty() && (muted[a] || muted[b])) continue;
    deliver(b, a);
    deliver(a, b);
  }
  stamps_.swap(next_stamps_);
  content_.swap(next_content_);
}

Stamp GossipNetwork::stamp(ClientId m, ClientId origin) const {
  if (m >= m_ || origin >= m_) throw UsageError("gossip network: index out of range");
  return stamps_[static_cast<std::size_t>(m) * m_ + origin];
}

std::span<const Stamp> GossipNetwork::stamps(ClientId m) const {
  if (m >= m_) throw UsageError("gossip network: client out of range");
  return {stamps_.data() + static_cast<std::size_t>(m) * m_, m_};
}

const ClientSummary* GossipNetwork::summary(ClientId m, ClientId origin) const {
  if (m >= m_ || origin >= m_) throw UsageError("gossip network: index out of range");
  const int c = column_[origin];
  if (c < 0) return nullptr;
  return content_[static_cast<std::size_t>(m) * content_origins_.size() + static_cast<std::size_t>(c)].get();
}

std::size_t GossipNetwork::staleness(ClientId m, std::size_t t) const {
  const auto row = stamps(m);
  const std::size_t oldest = *std::min_element(row.begin(), row.end());
  return t > oldest ? t - oldest : 0;
}

std::size_t GossipNetwork::max_staleness(std::size_t t) const {
  const std::size_t oldest = *std::min_element(stamps_.begin(), stamps_.end());
  return t > oldest ? t - oldest : 0;
}

FiltrationView GossipNetwork::view(ClientId m) const {
  FiltrationView v(m, m_);
  const auto row = stamps(m);
  for (ClientId j = 0; j < m_; ++j) {
    if (row[j] == 0) continue;
    const ClientSummary* s = summary(m, j);
    v.offer({j, row[j], s ? std::make_shared<const ClientSummary>(*s) : nullptr});
  }
  return v;
}

}  // namespace banditmesh
