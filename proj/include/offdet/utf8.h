#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace offdet::utf8 {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD, one per
// offending byte, so decoding never fails.
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view cps);
void AppendCodepoint(std::string& out, char32_t cp);

// Number of code points (with the same replacement policy as Decode).
std::size_t Length(std::string_view text);

bool IsAsciiSpace(char32_t cp);
bool IsPunctuation(char32_t cp);
bool IsLetter(char32_t cp);
bool IsDigit(char32_t cp);
bool IsUpper(char32_t cp);
bool IsLower(char32_t cp);
char32_t ToLower(char32_t cp);

std::string ToLower(std::string_view text);

}  // namespace offdet::utf8
