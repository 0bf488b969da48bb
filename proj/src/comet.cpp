#include "emomt/comet.hpp"

#include <algorithm>
#include <cstdint>
#include <future>
#include <numeric>

#include "emomt/error.hpp"
#include "emomt/http.hpp"

namespace emomt {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> StubCometClient::segment_scores(std::span<const CometSegment> segments) {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, s.source);
    h = fnv1a(h, "\x1f");
    h = fnv1a(h, s.hypothesis);
    h = fnv1a(h, "\x1f");
    h = fnv1a(h, s.reference);
    out.push_back(static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53));
  }
  return out;
}

EndpointCometClient::EndpointCometClient(std::string url, std::size_t batch_size, std::size_t max_in_flight)
    : url_(std::move(url)), batch_size_(std::max<std::size_t>(1, batch_size)),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

std::vector<double> EndpointCometClient::segment_scores(std::span<const CometSegment> segments) {
  auto post_batch = [this](std::span<const CometSegment> batch) {
    json data = json::array();
    for (const auto& s : batch) data.push_back({{"src", s.source}, {"mt", s.hypothesis}, {"ref", s.reference}});
    const json reply = http_post_json(url_, {{"data", std::move(data)}});
    auto it = reply.find("scores");
    if (it == reply.end() || !it->is_array() || it->size() != batch.size()) {
      throw TransportError(url_ + ": reply must carry one score per segment");
    }
    std::vector<double> got;
    for (const auto& v : *it) {
      if (!v.is_number()) throw TransportError(url_ + ": non-numeric segment score");
      got.push_back(v.get<double>());
    }
    return got;
  };

  // Futures are kept in submission order so scores land at their segment's position.
  std::vector<double> out;
  out.reserve(segments.size());
  std::vector<std::future<std::vector<double>>> in_flight;
  auto drain_one = [&] {
    auto part = in_flight.front().get();
    in_flight.erase(in_flight.begin());
    out.insert(out.end(), part.begin(), part.end());
  };
  for (std::size_t start = 0; start < segments.size(); start += batch_size_) {
    if (in_flight.size() >= max_in_flight_) drain_one();
    auto batch = segments.subspan(start, std::min(batch_size_, segments.size() - start));
    in_flight.push_back(std::async(std::launch::async, post_batch, batch));
  }
  while (!in_flight.empty()) drain_one();
  return out;
}

std::unique_ptr<CometClient> make_comet_client(const std::string& endpoint) {
  std::string url = endpoint.empty() ? env_or_empty("EMOMT_COMET_ENDPOINT") : endpoint;
  if (url.empty()) return std::make_unique<StubCometClient>();
  return std::make_unique<EndpointCometClient>(std::move(url));
}

CometScore comet_score(std::span<const std::string> sources, std::span<const EvalPair> pairs, CometClient& client) {
  if (sources.size() != pairs.size()) {
    throw UsageError("comet_score: " + std::to_string(sources.size()) + " sources but " +
                     std::to_string(pairs.size()) + " hypothesis/reference pairs");
  }
  if (pairs.empty()) throw UsageError("comet_score needs at least one segment");
  std::vector<CometSegment> segments;
  segments.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) segments.push_back({sources[i], pairs[i].hypothesis, pairs[i].reference});

  const auto scores = client.segment_scores(segments);
  if (scores.size() != segments.size()) throw TransportError(client.id() + ": segment score count mismatch");
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  const double scaled = 100.0 * mean;
  if (!(scaled >= 0.0 && scaled <= 100.0)) {
    throw ValidationError(client.id() + ": corpus score " + std::to_string(scaled) + " is outside [0, 100]");
  }
  return {scaled, client.id()};
}

}  // namespace emomt
