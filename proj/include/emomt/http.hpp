#pragma once

#include <chrono>
#include <string>

#include "emomt/jsonl.hpp"

namespace emomt {

// POSTs `body` as JSON to an http:// URL and parses the JSON reply.
// Connection failures, non-2xx statuses and unparsable replies raise TransportError.
json http_post_json(const std::string& url, const json& body,
                    std::chrono::seconds timeout = std::chrono::seconds(120));

// Value of an environment variable, or empty when unset.
std::string env_or_empty(const char* name);

}  // namespace emomt
