#pragma once

// Canonical JSON forms of the domain types. Key order is fixed and optional
// fields are written as null so equal values serialize to equal bytes.

#include <json.hpp>

#include "huci/model.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

Json to_json(const PersistentIdentifier& id);
Json to_json(const Author& a);
Json to_json(const CitationContext& c);
Json to_json(const BibliographicResource& r);
Json to_json(const Citation& c);

/// Decoders throw Error{malformed_record} on missing or mistyped fields.
PersistentIdentifier identifier_from_json(const Json& j);
BibliographicResource resource_from_json(const Json& j);
Citation citation_from_json(const Json& j);

/// Two-space indented dump with a trailing newline.
std::string pretty(const Json& j);

}  // namespace huci
