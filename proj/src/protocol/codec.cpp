// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/protocol/codec.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace quakemesh::protocol {

using json = nlohmann::ordered_json;

std::string_view to_string(CodecError e) noexcept {
  switch (e) {
    case CodecError::PayloadTooLarge: return "PayloadTooLarge";
    case CodecError::TruncatedFrame: return "TruncatedFrame";
    case CodecError::MalformedBody: return "MalformedBody";
    case CodecError::UnknownKind: return "UnknownKind";
    case CodecError::LengthMismatch: return "LengthMismatch";
  }
  return "?";
}

double quantize(double v) noexcept {
  if (!std::isfinite(v)) return v;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, kSignificantDigits);
  double out = v;
  std::from_chars(buf, res.ptr, out);
  return out;
}

namespace {

// ---- encoding -------------------------------------------------------------

json loc_json(const GeoLocation& g) {
  return json::array({quantize(g.latitude_deg()), quantize(g.longitude_deg())});
}

json sample_json(const AccelSample& s) {
  return json::array({s.timestamp_ms, quantize(s.x), quantize(s.y), quantize(s.z)});
}

json samples_json(const std::vector<AccelSample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) arr.push_back(sample_json(s));
  return arr;
}

json window_json(const SignalWindow& w) {
  json o = json::object();
  o["probe"] = w.probe_id.str();
  o["start_ms"] = w.window_start_ms;
  o["end_ms"] = w.window_end_ms;
  o["samples"] = samples_json(w.samples);
  return o;
}

json eew_json(const EEWMessage& m) {
  json id = json::object();
  id["origin"] = m.id.origin.str();
  id["seq"] = m.id.seq;
  json o = json::object();
  o["id"] = std::move(id);
  o["timestamp_ms"] = m.timestamp_ms;
  o["origin"] = loc_json(m.origin_location);
  o["hops"] = m.hop_count;
  o["window"] = window_json(m.signal_window);
  return o;
}

json neighbor_json(const NeighborEntry& n) {
  json o = json::object();
  o["id"] = n.node_id.str();
  o["endpoint"] = n.endpoint;
  o["location"] = loc_json(n.location);
  return o;
}

struct PayloadEncoder {
  json operator()(const ProbeHello& p) const {
    json o = json::object();
    o["location"] = loc_json(p.location);
    return o;
  }
  json operator()(const SampleBatch& p) const {
    json o = json::object();
    o["samples"] = samples_json(p.samples);
    return o;
  }
  json operator()(const Register& p) const {
    json o = json::object();
    o["location"] = loc_json(p.location);
    o["endpoint"] = p.endpoint;
    o["ttl_ms"] = p.ttl_ms;
    o["at_ms"] = p.at_ms;
    return o;
  }
  json operator()(const RegisterAck& p) const {
    json arr = json::array();
    for (const auto& n : p.neighbors) arr.push_back(neighbor_json(n));
    json o = json::object();
    o["neighbors"] = std::move(arr);
    return o;
  }
  json operator()(const ProbeQuery& p) const {
    json ex = json::array();
    for (const auto& id : p.exclude) ex.push_back(id.str());
    json o = json::object();
    o["location"] = loc_json(p.location);
    o["exclude"] = std::move(ex);
    return o;
  }
  json operator()(const ProbeAssign& p) const {
    json o = json::object();
    o["detector"] = p.detector ? neighbor_json(*p.detector) : json(nullptr);
    return o;
  }
  json operator()(const Eew& p) const {
    json o = json::object();
    o["message"] = eew_json(p.message);
    return o;
  }
  json operator()(const EewLog& p) const {
    json o = json::object();
    o["message"] = eew_json(p.message);
    o["at_ms"] = p.at_ms;
    return o;
  }
  json operator()(const Ping&) const { return json::object(); }
  json operator()(const Pong&) const { return json::object(); }
};

// ---- decoding -------------------------------------------------------------

struct Malformed {};

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw Malformed{};
  auto it = obj.find(key);
  if (it == obj.end()) throw Malformed{};
  return *it;
}

std::int64_t get_i64(const json& v) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) throw Malformed{};
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw Malformed{};
}

std::uint64_t get_u64(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw Malformed{};
}

double get_f64(const json& v) {
  if (!v.is_number()) throw Malformed{};
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Malformed{};
  return d;
}

std::string get_str(const json& v) {
  if (!v.is_string()) throw Malformed{};
  return v.get<std::string>();
}

NodeId get_id(const json& v) {
  auto s = get_str(v);
  if (s.empty()) throw Malformed{};
  return NodeId(std::move(s));
}

GeoLocation get_loc(const json& v) {
  if (!v.is_array() || v.size() != 2) throw Malformed{};
  try {
    return GeoLocation(get_f64(v[0]), get_f64(v[1]));
  } catch (const std::invalid_argument&) {
    throw Malformed{};
  }
}

std::vector<AccelSample> get_samples(const json& v) {
  if (!v.is_array()) throw Malformed{};
  std::vector<AccelSample> out;
  out.reserve(v.size());
  for (const auto& row : v) {
    if (!row.is_array() || row.size() != 4) throw Malformed{};
    out.push_back({get_i64(row[0]), get_f64(row[1]), get_f64(row[2]), get_f64(row[3])});
  }
  return out;
}

SignalWindow get_window(const json& v) {
  SignalWindow w{get_id(field(v, "probe")), get_samples(field(v, "samples")), get_i64(field(v, "start_ms")),
                 get_i64(field(v, "end_ms"))};
  if (w.window_end_ms <= w.window_start_ms) throw Malformed{};
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto t = w.samples[i].timestamp_ms;
    if (t < w.window_start_ms || t >= w.window_end_ms) throw Malformed{};
    if (i > 0 && t < w.samples[i - 1].timestamp_ms) throw Malformed{};
  }
  return w;
}

EEWMessage get_eew(const json& v) {
  const json& id = field(v, "id");
  const auto hops = get_u64(field(v, "hops"));
  if (hops > std::numeric_limits<std::uint32_t>::max()) throw Malformed{};
  return EEWMessage{MessageId{get_id(field(id, "origin")), get_u64(field(id, "seq"))},
                    get_i64(field(v, "timestamp_ms")), get_loc(field(v, "origin")), get_window(field(v, "window")),
                    static_cast<std::uint32_t>(hops)};
}

NeighborEntry get_neighbor(const json& v) {
  return NeighborEntry{get_id(field(v, "id")), get_str(field(v, "endpoint")), get_loc(field(v, "location"))};
}

Payload decode_payload(Kind kind, const json& p) {
  if (!p.is_object()) throw Malformed{};
  switch (kind) {
    case Kind::ProbeHello: return ProbeHello{get_loc(field(p, "location"))};
    case Kind::SampleBatch: return SampleBatch{get_samples(field(p, "samples"))};
    case Kind::Register:
      return Register{get_loc(field(p, "location")), get_str(field(p, "endpoint")), get_i64(field(p, "ttl_ms")),
                      get_i64(field(p, "at_ms"))};
    case Kind::RegisterAck: {
      const json& arr = field(p, "neighbors");
      if (!arr.is_array()) throw Malformed{};
      RegisterAck ack;
      for (const auto& n : arr) ack.neighbors.push_back(get_neighbor(n));
      return ack;
    }
    case Kind::ProbeQuery: {
      const json& ex = field(p, "exclude");
      if (!ex.is_array()) throw Malformed{};
      ProbeQuery q{get_loc(field(p, "location")), {}};
      for (const auto& id : ex) q.exclude.push_back(get_id(id));
      return q;
    }
    case Kind::ProbeAssign: {
      const json& d = field(p, "detector");
      if (d.is_null()) return ProbeAssign{};
      return ProbeAssign{get_neighbor(d)};
    }
    case Kind::Eew: return Eew{get_eew(field(p, "message"))};
    case Kind::EewLog: return EewLog{get_eew(field(p, "message")), get_i64(field(p, "at_ms"))};
    case Kind::Ping: return Ping{};
    case Kind::Pong: return Pong{};
  }
  throw Malformed{};
}

// The deepest legitimate body nests six levels; anything far beyond that is
// rejected before the parser sees it.
bool nesting_within(std::string_view body, int limit) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (char c : body) {
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') {
      if (++depth > limit) return false;
    } else if (c == ']' || c == '}') --depth;
  }
  return true;
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

}  // namespace

std::string encode_body(const Envelope& e) {
  json o = json::object();
  o["kind"] = std::string(to_string(e.kind()));
  o["sender"] = e.sender.str();
  o["seq"] = e.seq;
  o["payload"] = std::visit(PayloadEncoder{}, e.payload);
  return o.dump();
}

Expected<Bytes, CodecError> encode(const Envelope& e) {
  const std::string body = encode_body(e);
  if (body.size() > kMaxBodyBytes) return unexpected(CodecError::PayloadTooLarge);
  Bytes out;
  out.reserve(kFrameHeaderBytes + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Expected<Envelope, CodecError> decode_body(std::string_view body) {
  if (!nesting_within(body, 16)) return unexpected(CodecError::MalformedBody);
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return unexpected(CodecError::MalformedBody);
  try {
    const auto kind = parse_kind(get_str(field(doc, "kind")));
    if (!kind) return unexpected(CodecError::UnknownKind);
    return Envelope{get_id(field(doc, "sender")), get_u64(field(doc, "seq")),
                    decode_payload(*kind, field(doc, "payload"))};
  } catch (const Malformed&) {
    return unexpected(CodecError::MalformedBody);
  } catch (const std::exception&) {
    return unexpected(CodecError::MalformedBody);
  }
}

Expected<Envelope, CodecError> decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kFrameHeaderBytes) return unexpected(CodecError::TruncatedFrame);
  const std::uint32_t n = read_be32(frame.data());
  if (n > kMaxBodyBytes) return unexpected(CodecError::PayloadTooLarge);
  const std::size_t have = frame.size() - kFrameHeaderBytes;
  if (have < n) return unexpected(CodecError::TruncatedFrame);
  if (have > n) return unexpected(CodecError::LengthMismatch);
  const auto* body = reinterpret_cast<const char*>(frame.data() + kFrameHeaderBytes);
  return decode_body(std::string_view(body, n));
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (poisoned_) return;
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Expected<Envelope, CodecError>> FrameDecoder::next() {
  if (poisoned_ || buffered() < kFrameHeaderBytes) return std::nullopt;
  const std::uint32_t n = read_be32(buf_.data() + pos_);
  if (n > kMaxBodyBytes) {
    poisoned_ = true;
    buf_.clear();
    pos_ = 0;
    return Expected<Envelope, CodecError>(unexpected(CodecError::PayloadTooLarge));
  }
  if (buffered() - kFrameHeaderBytes < n) return std::nullopt;
  const auto* body = reinterpret_cast<const char*>(buf_.data() + pos_ + kFrameHeaderBytes);
  auto result = decode_body(std::string_view(body, n));
  pos_ += kFrameHeaderBytes + n;
  return result;
}

}  // namespace quakemesh::protocol
