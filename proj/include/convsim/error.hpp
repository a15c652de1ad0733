// convsim/error.hpp

// Copyright 2026  The convsim authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CONVSIM_ERROR_HPP_
#define CONVSIM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace convsim {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad or missing input: unreadable files, malformed manifest records,
/// out-of-range arguments. Maps to CLI exit code 2.
struct InputError : Error {
  using Error::Error;
};

/// Generation cannot proceed with the given inputs: no eligible speaker set,
/// not enough RIR sources in any room. Maps to CLI exit code 3.
struct InfeasibleError : Error {
  using Error::Error;
};

}  // namespace convsim

#endif  // CONVSIM_ERROR_HPP_
