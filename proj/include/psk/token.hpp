#ifndef PSK_TOKEN_HPP
#define PSK_TOKEN_HPP

#include "psk/digest.hpp"

#include <string>

namespace psk {

namespace cert_internal {
struct TokenIssuer;
}

// Acceptance token binding a checker-validated certificate to the sequent it
// discharges. Only the certificate checker can construct one; the kernel
// consumes them in admit_certified.
class AcceptanceToken {
public:
    const Digest& sequent_digest() const { return sequent_digest_; }
    const Digest& cert_digest() const { return cert_digest_; }
    const std::string& checker_version() const { return version_; }

private:
    AcceptanceToken(Digest sequent, Digest cert, std::string version)
        : sequent_digest_(sequent), cert_digest_(cert), version_(std::move(version)) {}

    Digest sequent_digest_;
    Digest cert_digest_;
    std::string version_;

    friend struct cert_internal::TokenIssuer;
};

} // namespace psk

#endif
