// SPDX-License-Identifier: Apache-2.0
//
// jsfr - joint sparse frequency recovery via atomic norm minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JSFR_COMMON_HPP
#define JSFR_COMMON_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace jsfr
{

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cdouble kI{0.0, 1.0};

// Error hierarchy. Every exception thrown by the library derives from Error.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class SaturationError : public Error
{
public:
    using Error::Error;
};

class NotPsdError : public Error
{
public:
    using Error::Error;
};

class NonUniqueError : public Error
{
public:
    using Error::Error;
};

class NumericalError : public Error
{
public:
    using Error::Error;
};

/// Reduce a frequency to [0, 1).
inline double wrap01(double f)
{
    double r = f - std::floor(f);
    return r >= 1.0 ? 0.0 : r;
}

/// Wrap-around distance on the unit circle; always in [0, 0.5].
inline double wrap_distance(double a, double b)
{
    const double d = std::abs(wrap01(a) - wrap01(b));
    return std::min(d, 1.0 - d);
}

/// Signed wrap difference a - b reduced to [-0.5, 0.5).
inline double wrap_diff(double a, double b)
{
    double d = a - b;
    d -= std::floor(d + 0.5);
    return d;
}

inline cdouble unit_phasor(double cycles)
{
    return std::polar(1.0, kTwoPi * cycles);
}

} // namespace jsfr

#endif
