#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emomt/bleu.hpp"

namespace emomt {

struct CometScore {
  double score = 0.0;  // 0..100
  std::string scorer_id;
};

struct CometSegment {
  std::string source;
  std::string hypothesis;
  std::string reference;
};

// External learned-metric scorer. Returns segment scores on the scorer's
// native 0..1 scale, one per input segment, in input order.
class CometClient {
 public:
  virtual ~CometClient() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> segment_scores(std::span<const CometSegment> segments) = 0;
};

// Deterministic stand-in: each segment scores a hash of its three strings
// mapped into [0, 1). Lets the pipeline run without a metric server.
class StubCometClient : public CometClient {
 public:
  std::string id() const override { return "stub-fnv1a"; }
  std::vector<double> segment_scores(std::span<const CometSegment> segments) override;
};

// HTTP client for a COMET server.
//
// Request:  POST <url>  {"data": [{"src": ..., "mt": ..., "ref": ...}, ...]}
// Response: {"scores": [s_0, s_1, ...]}  (same length and order as "data")
//
// Segments go out in batches, several in flight at once.
class EndpointCometClient : public CometClient {
 public:
  explicit EndpointCometClient(std::string url, std::size_t batch_size = 64, std::size_t max_in_flight = 4);
  std::string id() const override { return "endpoint:" + url_; }
  std::vector<double> segment_scores(std::span<const CometSegment> segments) override;

 private:
  std::string url_;
  std::size_t batch_size_;
  std::size_t max_in_flight_;
};

// Endpoint client when `endpoint` (or $EMOMT_COMET_ENDPOINT when `endpoint` is
// empty) is set, otherwise the stub.
std::unique_ptr<CometClient> make_comet_client(const std::string& endpoint);

// Corpus score = 100 * mean of segment scores. Sources must align with pairs
// (UsageError otherwise); a result outside [0, 100] is a ValidationError.
CometScore comet_score(std::span<const std::string> sources, std::span<const EvalPair> pairs, CometClient& client);

}  // namespace emomt
