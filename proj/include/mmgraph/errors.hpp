#pragma once

#include <stdexcept>
#include <string>

namespace mmgraph {

// Bad input: schema violations, broken references, out-of-range parameters.
// Maps to exit code 2 at the CLI.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Provider-side failure (transport, malformed payload, missing fixture entry).
// Carries the provider identity. Maps to exit code 3 at the CLI.
class ProviderError : public std::runtime_error {
public:
    ProviderError(const std::string& provider, const std::string& what)
        : std::runtime_error(provider + ": " + what), provider_(provider) {}

    const std::string& provider() const { return provider_; }

private:
    std::string provider_;
};

} // namespace mmgraph
