#pragma once

#include <stdexcept>
#include <string>

namespace pnlw {

// Quadrature grid cannot represent the requested band limit / integrand.
class resolution_error : public std::runtime_error {
public:
    explicit resolution_error(const std::string& what) : std::runtime_error(what) {}
};

// Chart point outside the image of the compactification (cos T + cos R <= 0).
class out_of_image_error : public std::runtime_error {
public:
    explicit out_of_image_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pnlw
