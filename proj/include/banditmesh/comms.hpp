#pragma once

// Information filtration between clients.
//
// Each client keeps, for every origin j, the freshest round t_{m,j} whose
// information from j has reached it, and optionally the summary j published
// at that round. Exchange is synchronous: the views after round t are merges
// of the neighbours' views as they stood when round t's messages were built.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "banditmesh/graph.hpp"

namespace banditmesh {

using Stamp = std::uint32_t;

/// What one client publishes about itself at one round.
struct ClientSummary {
  ClientId origin = 0;
  Stamp stamp = 0;
  std::vector<std::uint64_t> local_counts;
  std::vector<double> local_est;
  std::vector<double> global_est;
  std::vector<std::uint64_t> agg_counts;
  /// Homogeneous centers only.
  std::vector<double> hub_est;
  std::vector<std::uint64_t> hub_counts;

  bool operator==(const ClientSummary&) const = default;
};

using SummaryPtr = std::shared_ptr<const ClientSummary>;

/// One relayed entry: origin, its stamp, and the summary if content is carried.
struct MessageEntry {
  ClientId origin = 0;
  Stamp stamp = 0;
  SummaryPtr content;
};

struct Message {
  ClientId from = 0;
  std::vector<MessageEntry> entries;
};

/// One client's filtration. Stamp 0 means "nothing known from that origin".
class FiltrationView {
 public:
  FiltrationView(ClientId owner, std::size_t m);

  [[nodiscard]] ClientId owner() const noexcept { return owner_; }
  [[nodiscard]] std::size_t size() const noexcept { return stamps_.size(); }
  [[nodiscard]] Stamp stamp(ClientId origin) const;
  [[nodiscard]] const ClientSummary* summary(ClientId origin) const;
  [[nodiscard]] std::vector<ClientId> known_origins() const;

  /// Stamp the owner's own entry with round t. Throws SequencingError if t
  /// does not exceed the current own stamp.
  void record_own(Stamp t, SummaryPtr content = nullptr);

  /// Keep the entry if it is fresher than what is stored. Equal stamps with
  /// different content raise IntegrityError. Returns true when stored.
  bool offer(const MessageEntry& entry);

 private:
  ClientId owner_;
  std::vector<Stamp> stamps_;
  std::vector<SummaryPtr> content_;
};

/// Everything `view` knows, own entry included. The own stamp must equal t.
Message make_message(const FiltrationView& view, Stamp t);

/// `view` with every entry of `incoming` offered to it.
FiltrationView merge(FiltrationView view, std::span<const Message> incoming);

/// max_j (t - t_{m,j}) with unknown origins counted at stamp 0.
std::size_t staleness(const FiltrationView& view, std::size_t t);

// ---------------------------------------------------------------------------

/// Receives (t, from, to, origin, stamp) for each entry that refreshed a view.
using TraceSink = std::function<void(std::size_t, ClientId, ClientId, ClientId, Stamp)>;

/// All M filtrations of one run, stored flat.
///
/// Content is carried only for the origins passed at construction, so a run
/// that needs stamps for everyone but summaries from a few origins stays cheap.
class GossipNetwork {
 public:
  GossipNetwork(std::size_t m, std::vector<ClientId> content_origins = {});
  /// Carry content for every origin.
  static GossipNetwork with_all_content(std::size_t m);

  [[nodiscard]] std::size_t size() const noexcept { return m_; }

  /// Replace the set of origins whose content is carried; stored content is dropped.
  void carry_content(std::vector<ClientId> content_origins);

  /// Own entry of client `m` for round t; call for every client before exchange.
  void publish(ClientId m, Stamp t, SummaryPtr content = nullptr);

  /// Synchronous exchange over the round's edges. Edges touching a client
  /// with muted[i] != 0 carry nothing this round.
  void exchange(const GraphSnapshot& snapshot, std::span<const char> muted = {}, const TraceSink* trace = nullptr);

  [[nodiscard]] Stamp stamp(ClientId m, ClientId origin) const;
  [[nodiscard]] std::span<const Stamp> stamps(ClientId m) const;
  /// nullptr when origin's content is not carried or not yet known to m.
  [[nodiscard]] const ClientSummary* summary(ClientId m, ClientId origin) const;
  [[nodiscard]] std::size_t staleness(ClientId m, std::size_t t) const;
  [[nodiscard]] std::size_t max_staleness(std::size_t t) const;
  [[nodiscard]] FiltrationView view(ClientId m) const;

 private:
  std::size_t m_;
  std::vector<Stamp> stamps_;
  std::vector<Stamp> next_stamps_;
  std::vector<int> column_;  // origin -> content column, -1 if not carried
  std::vector<ClientId> content_origins_;
  std::vector<SummaryPtr> content_;
  std::vector<SummaryPtr> next_content_;
};

}  // namespace banditmesh
