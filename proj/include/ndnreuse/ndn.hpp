#pragma once

#include "ndnreuse/descriptor.hpp"
#include "ndnreuse/similarity_cache.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ndnreuse {

using NodeId = int;
using FaceId = int;

/// Face of the node's own application (consumer app or local executor).
inline constexpr FaceId kLocalFace = -1;

class NameError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Name {
  std::vector<std::string> components;

  std::size_t size() const noexcept { return components.size(); }

  Name prefix(std::size_t n) const
  {
    return Name{{components.begin(), components.begin() + static_cast<std::ptrdiff_t>(std::min(n, size()))}};
  }

  std::string to_uri() const
  {
    if (components.empty())
      return "/";
    std::string out;
    for (const auto& c : components)
      out += "/" + c;
    return out;
  }

  friend auto operator<=>(const Name&, const Name&) = default;
};

/// Parses "/a/b/c" into components; any arity >= 1.
inline Name
parse_prefix(std::string_view text)
{
  if (text.empty() || text.front() != '/')
    throw NameError("name must start with '/': " + std::string(text));
  Name n;
  std::size_t pos = 1;
  while (pos <= text.size()) {
    auto next = text.find('/', pos);
    if (next == std::string_view::npos)
      next = text.size();
    auto comp = text.substr(pos, next - pos);
    if (comp.empty())
      throw NameError("empty name component in " + std::string(text));
    n.components.emplace_back(comp);
    pos = next + 1;
  }
  return n;
}

/// Computation request name /<service-name>/<unique-id>/<image-name>.
inline Name
parse_name(std::string_view text)
{
  Name n = parse_prefix(text);
  if (n.size() != 3)
    throw NameError("computation name needs exactly 3 components: " + std::string(text));
  return n;
}

inline std::string
format_name(const Name& n)
{
  for (const auto& c : n.components)
    if (c.empty() || c.find('/') != std::string::npos)
      throw NameError("invalid name component '" + c + "'");
  return n.to_uri();
}

struct Interest {
  Name name;
  std::uint64_t nonce = 0;
  double emit_time = 0;
  std::uint64_t input_bits = 0; ///< task input carried upstream
};

struct Data {
  Name name;
  std::uint64_t payload_bits = 1;
  bool from_reuse = false;
  NodeId origin = -1;
  std::vector<std::uint8_t> result;
};

struct PitEntry {
  Name name;
  std::set<FaceId> faces;
  std::set<std::uint64_t> nonces;
  double created = 0;
};

class Pit {
public:
  PitEntry* find(const Name& n)
  {
    auto it = m_entries.find(n.to_uri());
    return it == m_entries.end() ? nullptr : &it->second;
  }

  PitEntry& insert(const Name& n, FaceId face, std::uint64_t nonce, double now)
  {
    auto& e = m_entries[n.to_uri()];
    if (e.faces.empty()) {
      e.name = n;
      e.created = now;
    }
    e.faces.insert(face);
    e.nonces.insert(nonce);
    return e;
  }

  std::optional<PitEntry> erase(const Name& n)
  {
    auto it = m_entries.find(n.to_uri());
    if (it == m_entries.end())
      return std::nullopt;
    PitEntry e = std::move(it->second);
    m_entries.erase(it);
    return e;
  }

  std::size_t size() const noexcept { return m_entries.size(); }

private:
  std::map<std::string, PitEntry> m_entries;
};

class Fib {
public:
  void add(const Name& prefix, FaceId face) { m_routes[prefix.to_uri()] = face; }

  /// Longest-prefix match by component count.
  std::optional<FaceId> lpm(const Name& name) const
  {
    for (std::size_t len = name.size(); len >= 1; --len) {
      auto it = m_routes.find(name.prefix(len).to_uri());
      if (it != m_routes.end())
        return it->second;
    }
    return std::nullopt;
  }

  const std::map<std::string, FaceId>& routes() const noexcept { return m_routes; }

private:
  std::map<std::string, FaceId> m_routes;
};

enum class NodeKind { Consumer, Router, ComputeNode };

inline const char*
to_string(NodeKind k)
{
  switch (k) {
  case NodeKind::Consumer: return "consumer";
  case NodeKind::Router: return "router";
  case NodeKind::ComputeNode: return "compute";
  }
  return "?";
}

enum class NodeEvent { INTEREST_RX, CS_HIT, CS_MISS, PIT_AGG, FWD, DATA_RX, EXEC_START, EXEC_END, DROP };

inline const char*
to_string(NodeEvent e)
{
  switch (e) {
  case NodeEvent::INTEREST_RX: return "INTEREST_RX";
  case NodeEvent::CS_HIT: return "CS_HIT";
  case NodeEvent::CS_MISS: return "CS_MISS";
  case NodeEvent::PIT_AGG: return "PIT_AGG";
  case NodeEvent::FWD: return "FWD";
  case NodeEvent::DATA_RX: return "DATA_RX";
  case NodeEvent::EXEC_START: return "EXEC_START";
  case NodeEvent::EXEC_END: return "EXEC_END";
  case NodeEvent::DROP: return "DROP";
  }
  return "?";
}

struct LogRecord {
  double time = 0;
  NodeId node = 0;
  NodeEvent event = NodeEvent::DROP;
  std::string name;
  std::string detail;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

namespace action {
struct ReplyData {
  FaceId face;
  Data data;
};
struct Aggregate {};
struct ForwardInterest {
  FaceId face;
  Interest interest;
};
struct ForwardData {
  FaceId face;
  Data data;
};
struct Execute {
  Interest interest;
};
struct Drop {
  std::string reason;
};
} // namespace action

using Action = std::variant<action::ReplyData, action::Aggregate, action::ForwardInterest, action::ForwardData,
                            action::Execute, action::Drop>;

/// name -> descriptor of the named image; nullptr when the name does not
/// resolve to an image.
using DescriptorResolver = std::function<const Descriptor*(const Name&)>;

/// Forwarding state of one node: similarity Content Store, PIT and FIB.
///
/// Interest pipeline: CS similarity lookup, then PIT aggregation on the exact
/// name, then local execution for served services, then FIB longest-prefix
/// match; anything else is dropped.
class NdnNode {
public:
  NdnNode(NodeId id, NodeKind kind, DescriptorResolver resolver = {}) : m_id(id), m_kind(kind), m_resolve(std::move(resolver))
  {
  }

  NodeId id() const noexcept { return m_id; }
  NodeKind kind() const noexcept { return m_kind; }

  void set_cs(SimilarityCache cs) { m_cs.emplace(std::move(cs)); }
  SimilarityCache* cs() noexcept { return m_cs ? &*m_cs : nullptr; }
  const SimilarityCache* cs() const noexcept { return m_cs ? &*m_cs : nullptr; }

  /// Whether data passing through is inserted into the CS.
  void set_caches_data(bool on) noexcept { m_caches_data = on; }

  void serve(const std::string& service) { m_served.insert(service); }
  bool serves(const std::string& service) const { return m_served.count(service) > 0; }

  Pit& pit() noexcept { return m_pit; }
  Fib& fib() noexcept { return m_fib; }
  const Fib& fib() const noexcept { return m_fib; }

  void set_logger(std::function<void(const LogRecord&)> log) { m_log = std::move(log); }

  std::vector<Action> process_interest(FaceId in, const Interest& interest, double now)
  {
    const auto uri = interest.name.to_uri();
    const std::string& service = interest.name.components.empty() ? m_empty : interest.name.components.front();

    if (m_cs) {
      const Descriptor* d = m_resolve ? m_resolve(interest.name) : nullptr;
      if (d != nullptr) {
        if (auto hit = m_cs->lookup(*d, ++m_tick, service)) {
          log(now, NodeEvent::CS_HIT, uri, "dist=" + fmt_num(hit->distance) + " src=" + hit->entry->name);
          Data data{interest.name, hit->entry->result.size_bits, true, m_id, hit->entry->result.bytes};
          return {action::ReplyData{in, std::move(data)}};
        }
      }
      log(now, NodeEvent::CS_MISS, uri, "");
    }

    if (auto* pending = m_pit.find(interest.name)) {
      if (pending->nonces.count(interest.nonce)) {
        log(now, NodeEvent::DROP, uri, "duplicate-nonce");
        return {action::Drop{"duplicate nonce"}};
      }
      pending->faces.insert(in);
      pending->nonces.insert(interest.nonce);
      log(now, NodeEvent::PIT_AGG, uri, "faces=" + std::to_string(pending->faces.size()));
      return {action::Aggregate{}};
    }

    if (m_kind == NodeKind::ComputeNode && serves(service)) {
      m_pit.insert(interest.name, in, interest.nonce, now);
      return {action::Execute{interest}};
    }

    if (auto face = m_fib.lpm(interest.name)) {
      m_pit.insert(interest.name, in, interest.nonce, now);
      log(now, NodeEvent::FWD, uri, "face=" + std::to_string(*face));
      return {action::ForwardInterest{*face, interest}};
    }

    log(now, NodeEvent::DROP, uri, "no-route");
    return {action::Drop{"no route"}};
  }

  std::vector<Action> process_data(FaceId in, const Data& data, double now)
  {
    const auto uri = data.name.to_uri();
    auto entry = m_pit.erase(data.name);
    if (!entry) {
      log(now, NodeEvent::DROP, uri, "unsolicited");
      return {action::Drop{"unsolicited data"}};
    }
    log(now, NodeEvent::DATA_RX, uri, "in=" + std::to_string(in) + (data.from_reuse ? " reuse" : ""));

    if (m_cs && m_caches_data && !data.from_reuse) {
      const Descriptor* d = m_resolve ? m_resolve(data.name) : nullptr;
      if (d != nullptr)
        m_cs->insert(uri, *d, ResultPayload{data.result, data.payload_bits}, ++m_tick, data.name.components.front());
    }

    std::vector<Action> out;
    for (FaceId f : entry->faces)
      out.push_back(action::ForwardData{f, data});
    return out;
  }

  /// Removes the entry for `name` if it is still the one created at
  /// `created`; returns the removed entry.
  std::optional<PitEntry> expire(const Name& name, double created, double now)
  {
    auto* e = m_pit.find(name);
    if (e == nullptr || e->created != created)
      return std::nullopt;
    log(now, NodeEvent::DROP, name.to_uri(), "pit-expired");
    return m_pit.erase(name);
  }

private:
  void log(double t, NodeEvent e, const std::string& name, std::string detail)
  {
    if (m_log)
      m_log(LogRecord{t, m_id, e, name, std::move(detail)});
  }

  NodeId m_id;
  NodeKind m_kind;
  DescriptorResolver m_resolve;
  std::optional<SimilarityCache> m_cs;
  bool m_caches_data = true;
  std::set<std::string> m_served;
  Pit m_pit;
  Fib m_fib;
  std::uint64_t m_tick = 0;
  std::function<void(const LogRecord&)> m_log;
  std::string m_empty;
};

} // namespace ndnreuse
