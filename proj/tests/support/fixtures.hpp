#pragma once

// Shared synthetic records and a reference teacher generation used across the
// test binaries.

#include <string>
#include <vector>

#include "rcv/corpus.hpp"

namespace rcvtest {

// A real teacher generation for a supported claim: seven structured steps and
// a terminal braced verdict. Used to pin parser behavior on realistic output.
inline const std::string kSampleTeacherPath =
    R"(## Reasoning Step 1: Verify if Joseph Nassise is a New York Times and USA Today bestselling American urban fantasy writer.

- The context states that Joseph Nassise is a New York Times and USA Today bestselling American urban fantasy writer.

## Reasoning Step 2: Verify if Joseph Nassise resides in Arizona.

- The context confirms that Joseph Nassise lives with his wife and four children in Arizona.

## Reasoning Step 3: Verify if Joseph Nassise wrote the Templar Chronicles series.

- The context mentions that Joseph Nassise is the author of the internationally bestselling Templar Chronicles series.

## Reasoning Step 4: Verify if Joseph Nassise wrote the Jeremiah Hunt Chronicle.

- The context states that Joseph Nassise is the author of the Jeremiah Hunt Chronicle.

## Reasoning Step 5: Verify if Joseph Nassise wrote the Great Undead War series.

- The context confirms that Joseph Nassise is the author of the Great Undead War series.

## Reasoning Step 6: Verify if Joseph Nassise served as the president of the Horror Writers Association from 2002 to 2005.

- The context indicates that Nassise served as the president of the Horror Writers Association from 2002 to 2005.

## Reasoning Step 7: Verify if there are any discrepancies or missing components in the claim.

- The claim accurately reflects the information provided in the context without any discrepancies or missing components.

Based on the above steps, the claim is fully supported by the context.

{support})";

inline const std::string kSampleContext =
    "Joseph Nassise (born 1968) is a New York Times and USA Today bestselling American urban "
    "fantasy writer and the author of more than forty novels.\n\n"
    "Joseph Nassise lives with his wife and four children in Arizona. Joseph Nassise is the "
    "author of the internationally bestselling Templar Chronicles series, the Jeremiah Hunt "
    "Chronicle, the Great Undead War series, as well as several books for Gold Eagle's Rogue "
    "Angel line.\n\n"
    "Joseph Nassise served as the president of the Horror Writers Association from 2002 to "
    "2005 and a Trustee of the same from 2008 to 2010.";

inline const std::string kSampleClaim =
    "Joseph Nassise is a New York Times and USA Today bestselling American urban fantasy "
    "writer and the author residing in Arizona who wrote Templar Chronicles series, the "
    "Jeremiah Hunt Chronicl and the Great Undead War series and erved as the president of the "
    "Horror Writers Association from 2002 to 2005.";

inline rcv::ClaimRecord make_record(const std::string& id, rcv::VeracityLabel gold,
                                    rcv::Dataset dataset = rcv::Dataset::Hover2,
                                    const std::string& claim = "Paris is in France.",
                                    const std::string& evidence =
                                        "Paris is the capital of France.") {
    rcv::ClaimRecord record;
    record.id = id;
    record.claim = claim;
    record.evidence = evidence;
    record.gold = gold;
    record.dataset = dataset;
    record.split = rcv::Split::Train;
    return record;
}

inline std::vector<rcv::ClaimRecord> make_corpus(std::size_t n, rcv::Dataset dataset,
                                                 rcv::VeracityLabel gold) {
    std::vector<rcv::ClaimRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        records.push_back(make_record("syn-" + std::to_string(i), gold, dataset,
                                      "Claim number " + std::to_string(i) + " is true.",
                                      "Evidence body " + std::to_string(i) + "."));
    }
    return records;
}

}  // namespace rcvtest
